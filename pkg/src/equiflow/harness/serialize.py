"""JSON/CSV codecs for harness reports and configs.

Matrices travel as row-major lists of [re, im] pairs; complex scalars as
[re, im]; reports are JSON with sorted keys so identical configs and seeds
produce bitwise-identical bodies.
"""

import csv
import json

import numpy as np

from ..errors import ConfigInvalid

__all__ = [
    "complex_to_pair",
    "matrix_to_wire",
    "matrix_from_wire",
    "jsonable",
    "dump_report",
    "write_spectrum_csv",
]


def complex_to_pair(z):
    z = complex(z)
    return [z.real, z.imag]


def matrix_to_wire(M):
    M = np.asarray(M, dtype=complex)
    return [[complex_to_pair(z) for z in row] for row in M]


def matrix_from_wire(data, what="matrix"):
    try:
        M = np.asarray([[complex(re, im) for re, im in row] for row in data])
    except (TypeError, ValueError) as exc:
        raise ConfigInvalid(f"{what}: expected rows of [re, im] pairs ({exc})")
    if M.ndim != 2:
        raise ConfigInvalid(f"{what}: not a matrix")
    return M


def jsonable(obj):
    """Recursively convert report values into JSON-serializable data."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, complex):
        return complex_to_pair(obj)
    if isinstance(obj, np.ndarray):
        if np.iscomplexobj(obj):
            return matrix_to_wire(obj) if obj.ndim == 2 else [complex_to_pair(z) for z in obj]
        return obj.tolist()
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.complexfloating,)):
        return complex_to_pair(complex(obj))
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def dump_report(body, wall_time=None):
    """Serialize a report: deterministic body, wall time kept outside it."""
    doc = {"report": jsonable(body)}
    if wall_time is not None:
        doc["wall_time_s"] = round(float(wall_time), 6)
    return json.dumps(doc, sort_keys=True, indent=2)


def write_spectrum_csv(path, records, labels):
    """Spectrum CSV: lambda, re_weight_<g>, im_weight_<g>, ... per element."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        header = ["lambda"]
        for lab in labels:
            header += [f"re_weight_{lab}", f"im_weight_{lab}"]
        w.writerow(header)
        for lam, weights in records:
            row = [f"{lam:.12g}"]
            for z in weights:
                row += [f"{z.real:.12g}", f"{z.imag:.12g}"]
            w.writerow(row)
