import csv
import io
import json
import logging
import math
import sys
import threading
from contextlib import contextmanager
from datetime import datetime
from enum import Enum
from fractions import Fraction
from typing import Any, Dict, Iterable, Iterator, List, Optional, Tuple

from mpmath import mp, mpf
from pydantic import BaseModel
from pythonjsonlogger import jsonlogger

logger = logging.getLogger(__name__)

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


def configure_logging(level: str = "WARNING", json_format: bool = False) -> None:
    """Route package logs to stderr, optionally as JSON lines."""
    handler = logging.StreamHandler(sys.stderr)
    if json_format:
        handler.setFormatter(jsonlogger.JsonFormatter(LOG_FORMAT))
    else:
        handler.setFormatter(logging.Formatter(LOG_FORMAT))

    root = logging.getLogger()
    for existing in list(root.handlers):
        root.removeHandler(existing)
    root.addHandler(handler)
    root.setLevel(level.upper())


# mpmath keeps one global context; every precision change goes through this lock.
_precision_lock = threading.RLock()


@contextmanager
def working_precision(precision_bits: int) -> Iterator[None]:
    with _precision_lock:
        with mp.workprec(precision_bits):
            yield


def bits_to_digits(precision_bits: int) -> int:
    """Decimal digits resolvable at the given binary precision."""
    return int(precision_bits * math.log10(2))


def digits_to_bits(digits: int, guard_digits: int = 10) -> int:
    return int(math.ceil((digits + guard_digits) * math.log2(10)))


def render_decimal(value: mpf, digits: int) -> str:
    """Fixed-point rendering with `digits` significant digits, never scientific."""
    with working_precision(digits_to_bits(digits)):
        return mp.nstr(value, digits, min_fixed=-10**6, max_fixed=10**6)


def truncate_decimal(value: mpf, decimals: int) -> str:
    """Truncate a value in [0, 1) to `decimals` digits after the point."""
    with working_precision(digits_to_bits(decimals, 20)):
        scaled = int(mp.floor(value * mp.mpf(10) ** decimals))
    return "0." + str(scaled).rjust(decimals, "0")


def round_decimal(value: mpf, decimals: int) -> str:
    with working_precision(digits_to_bits(decimals, 20)):
        scaled = int(mp.nint(value * mp.mpf(10) ** decimals))
    return "0." + str(scaled).rjust(decimals, "0")


def group_digits(decimal: str, group: int = 10) -> str:
    """Split the fractional digits of a decimal string into space-separated groups."""
    whole, _, fraction = decimal.partition(".")
    if not fraction:
        return decimal
    chunks = [fraction[i:i + group] for i in range(0, len(fraction), group)]
    return whole + "." + " ".join(chunks)


def common_decimal_prefix(lower: mpf, upper: mpf, decimals: int) -> int:
    """Number of leading fractional digits on which truncated lower and upper agree."""
    low = truncate_decimal(lower, decimals)[2:]
    high = truncate_decimal(upper, decimals)[2:]
    agreed = 0
    for a, b in zip(low, high):
        if a != b:
            break
        agreed += 1
    return agreed


def to_canonical(obj: Any, real_digits: Optional[int] = None) -> Any:
    """Convert models to JSON-ready structures: big numbers become decimal strings."""
    if isinstance(obj, BaseModel):
        digits = real_digits
        bits = getattr(obj, "precision_bits", None)
        if isinstance(bits, int):
            digits = bits_to_digits(bits)
        return {
            name: to_canonical(getattr(obj, name), digits)
            for name in obj.__fields__
        }
    if isinstance(obj, bool) or obj is None:
        return obj
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, mpf):
        return render_decimal(obj, real_digits or 30)
    if isinstance(obj, Fraction):
        return f"{obj.numerator}/{obj.denominator}"
    if isinstance(obj, float):
        return repr(obj)
    if isinstance(obj, dict):
        return {str(key): to_canonical(value, real_digits) for key, value in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_canonical(item, real_digits) for item in obj]
    return obj


def dump_json(obj: Any) -> str:
    return json.dumps(to_canonical(obj), indent=2, ensure_ascii=False) + "\n"


def records_to_csv(rows: Iterable[Dict[str, Any]], columns: List[str]) -> str:
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=columns, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({key: to_canonical(row[key]) for key in columns})
    return buffer.getvalue()


def format_edge_list(family: str, stage: int, vertices: List[str], edges: List[Tuple[str, str]]) -> str:
    lines = [f"{family} {stage} {len(vertices)} {len(edges)}"]
    lines.extend(f"{u} {v}" for u, v in edges)
    return "\n".join(lines) + "\n"


def parse_edge_list(text: str) -> Tuple[str, int, int, List[Tuple[str, str]]]:
    """Parse the edge-list format; returns (family, stage, vertex_count, edges)."""
    lines = [line.strip() for line in text.splitlines() if line.strip()]
    if not lines:
        raise ValueError("empty edge list")
    header = lines[0].split()
    if len(header) != 4:
        raise ValueError(f"malformed edge-list header: {lines[0]!r}")
    family, stage, vertex_count, edge_count = header[0], int(header[1]), int(header[2]), int(header[3])

    edges = []
    for line in lines[1:]:
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"malformed edge line: {line!r}")
        edges.append((parts[0], parts[1]))
    if len(edges) != edge_count:
        raise ValueError(f"header announces {edge_count} edges, found {len(edges)}")
    return family, stage, vertex_count, edges


def create_error_response(error_type: str, message: str) -> Dict[str, Any]:
    """Create standardized error response."""
    return {
        "error": True,
        "error_type": error_type,
        "message": message,
        "timestamp": datetime.now().isoformat()
    }
