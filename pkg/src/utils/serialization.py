"""JSON codecs for experiment inputs and artifacts.

Rationals travel as "p/q" strings, keys are sorted and files end with a
newline, so equal inputs always produce byte-identical files.
"""

import json
import sys
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from src.dynamics.measure import DiscreteMeasure
from src.dynamics.symbolic import point_from_json, point_to_json
from src.dynamics.tracing import Specification
from src.utils.config import parse_rational
from src.utils.errors import InputError, LabError


def dumps(document: Any) -> str:
    return json.dumps(document, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def load_json(path: Union[str, Path]) -> Any:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise InputError(f"cannot read {path}: {e}") from e
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise InputError(f"{path} is not valid JSON: {e}") from e


def write_text(text: str, path: Optional[Union[str, Path]]) -> None:
    """Write text to path, or to standard output when path is None"""
    if path is None:
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)
    except OSError as e:
        raise InputError(f"cannot write {path}: {e}") from e


def rational_to_json(value: Fraction) -> str:
    return str(Fraction(value))


def measure_from_json(document: Any, horizon: int) -> DiscreteMeasure:
    """{"support": [point, ...], "weights": ["p/q", ...]}"""
    if not isinstance(document, dict) or "support" not in document or "weights" not in document:
        raise InputError("a measure needs 'support' and 'weights' arrays")
    support, weights = document["support"], document["weights"]
    if not isinstance(support, list) or not isinstance(weights, list):
        raise InputError("'support' and 'weights' must be arrays")
    points = [point_from_json(entry) for entry in support]
    return DiscreteMeasure.from_points(points, [parse_rational(w) for w in weights], horizon)


def measure_to_json(mu: DiscreteMeasure) -> Dict[str, Any]:
    return {
        "horizon": mu.horizon,
        "support": [point_to_json(point) for point in mu.points],
        "weights": [rational_to_json(weight) for weight in mu.weights],
    }


def measures_from_json(document: Any, horizon: int) -> List[DiscreteMeasure]:
    """A single measure or a list of measures"""
    if isinstance(document, list):
        if not document:
            raise InputError("measure list is empty")
        return [measure_from_json(entry, horizon) for entry in document]
    return [measure_from_json(document, horizon)]


def specification_from_json(document: Any) -> Specification:
    """[{"point": ..., "length": n}, ...]"""
    if not isinstance(document, list) or not document:
        raise InputError("a specification must be a nonempty array of segments")
    segments = []
    for entry in document:
        if not isinstance(entry, dict) or "point" not in entry or "length" not in entry:
            raise InputError(f"malformed segment {entry!r}")
        try:
            length = int(entry["length"])
        except (TypeError, ValueError) as e:
            raise InputError(f"segment length must be an integer: {entry['length']!r}") from e
        segments.append((point_from_json(entry["point"]), length))
    return Specification.of(segments)


def specification_to_json(xi: Specification) -> List[Dict[str, Any]]:
    return [{"point": point_to_json(point), "length": length} for point, length in xi.segments]


def error_to_json(error: LabError, command: Optional[str] = None) -> Dict[str, Any]:
    """Error document written in place of an artifact"""
    return {"command": command, **error.to_dict()}
