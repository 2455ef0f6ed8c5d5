"""Versioned JSON formats for systems, supports-only files and root sets."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .errors import ParseError
from .expsum import ExpSumSystem, SupportTuple
from .newton import Certificate

VERSION = "1"


# ---------------------------------------------------------------- helpers

def _complex_vec(obj: Any, where: str) -> np.ndarray:
    """Accepts ``{"re": [...], "im": [...]}`` or a list whose entries are
    ``{"re", "im"}`` objects, ``[re, im]`` pairs or plain reals."""
    try:
        if isinstance(obj, dict):
            re = np.asarray(obj["re"], dtype=float)
            im = np.asarray(obj.get("im", [0.0] * len(re)), dtype=float)
            if re.shape != im.shape or re.ndim != 1:
                raise ValueError("re/im length mismatch")
            return re + 1j * im
        out = []
        for v in obj:
            if isinstance(v, dict):
                out.append(complex(float(v["re"]), float(v.get("im", 0.0))))
            elif isinstance(v, (list, tuple)):
                if len(v) != 2:
                    raise ValueError("complex entries are [re, im] pairs")
                out.append(complex(float(v[0]), float(v[1])))
            else:
                out.append(complex(float(v)))
        return np.array(out, dtype=complex)
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed complex vector at {where}: {exc}", where=where) from None


def _cvec_json(v: np.ndarray) -> list[dict]:
    return [{"re": float(c.real), "im": float(c.imag)} for c in np.asarray(v, dtype=complex)]


def read_json(path: str | Path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror}", path=str(path)) from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path} is not valid JSON: {exc.msg} (line {exc.lineno})", path=str(path)) from None
    if not isinstance(data, dict):
        raise ParseError(f"{path} must contain a JSON object", path=str(path))
    return data


def _check_version(d: dict, what: str) -> None:
    v = d.get("version", VERSION)
    if str(v) != VERSION:
        raise ParseError(f"unsupported {what} version {v!r}", version=v)


# ---------------------------------------------------------------- systems

@dataclass
class SystemFile:
    supports: SupportTuple
    system: ExpSumSystem | None
    labels: list[str] | None = None

    def require_system(self) -> ExpSumSystem:
        if self.system is None:
            raise ParseError("file has supports only; coefficients are required here")
        return self.system


def parse_supports(d: dict) -> SupportTuple:
    if "supports" not in d:
        raise ParseError("missing field 'supports'")
    sup = d["supports"]
    try:
        sets = [[tuple(int(c) for c in p) for p in s] for s in sup]
        for s in sup:
            for p in s:
                for c in p:
                    if float(c) != int(c):
                        raise ValueError(f"non-integer exponent {c}")
    except (TypeError, ValueError) as exc:
        raise ParseError(f"supports must be lists of integer points: {exc}") from None
    n = d.get("n", len(sets))
    if n != len(sets) or any(len(p) != n for s in sets for p in s):
        raise ParseError(f"dimensions inconsistent with n = {n}", n=n)
    weights = d.get("weights")
    try:
        return SupportTuple(sets, weights)
    except ValueError as exc:
        raise ParseError(str(exc)) from None


def parse_system(d: dict) -> SystemFile:
    """SystemFile or supports-only file (no ``coefficients`` field)."""
    _check_version(d, "system file")
    supports = parse_supports(d)
    labels = d.get("labels")
    if labels is not None and (not isinstance(labels, list) or len(labels) != supports.n):
        raise ParseError("labels must be a list with one entry per equation")
    coeffs = d.get("coefficients")
    if coeffs is None:
        return SystemFile(supports, None, labels)
    if not isinstance(coeffs, list) or len(coeffs) != supports.n:
        raise ParseError("coefficients must have one entry per equation")
    vecs = [_complex_vec(c, f"coefficients[{i}]") for i, c in enumerate(coeffs)]
    for i, (v, s) in enumerate(zip(vecs, supports.S_i)):
        if v.shape != (s,):
            raise ParseError(f"equation {i} has {v.shape[0]} coefficients for {s} support points", i=i)
        if not np.all(np.isfinite(v)):
            raise ParseError(f"equation {i} has non-finite coefficients", i=i)
    return SystemFile(supports, ExpSumSystem(supports, vecs), labels)


def load_system(path: str | Path) -> SystemFile:
    return parse_system(read_json(path))


def system_to_json(supports: SupportTuple, system: ExpSumSystem | None = None, labels: Sequence[str] | None = None) -> dict:
    out: dict[str, Any] = {
        "version": VERSION,
        "n": supports.n,
        "supports": [[list(p) for p in s] for s in supports.A],
        "weights": [r.tolist() for r in supports.rho],
    }
    if system is not None:
        out["coefficients"] = [_cvec_json(c) for c in system.true_coeffs()]
    if labels is not None:
        out["labels"] = list(labels)
    return out


def system_hash(system: ExpSumSystem) -> str:
    """SHA-256 of the canonical (sorted, compact) JSON of the system."""
    blob = json.dumps(system_to_json(system.supports, system), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


# ---------------------------------------------------------------- roots

def roots_to_json(system: ExpSumSystem, roots: Sequence[tuple[np.ndarray, Certificate | None]]) -> dict:
    return {
        "version": VERSION,
        "system_hash": system_hash(system),
        "roots": [
            {"re": np.real(z).tolist(), "im": np.imag(z).tolist(), "certificate": None if c is None else c.to_json()}
            for z, c in roots
        ],
    }


def parse_roots(d: dict, n: int | None = None) -> tuple[str | None, list[tuple[np.ndarray, Certificate | None]]]:
    """``(system_hash, [(z, certificate or None)])``; certificates are checked for consistency."""
    _check_version(d, "roots file")
    if "roots" not in d or not isinstance(d["roots"], list):
        raise ParseError("missing list field 'roots'")
    out = []
    for k, r in enumerate(d["roots"]):
        z = _complex_vec(r, f"roots[{k}]")
        if n is not None and z.shape != (n,):
            raise ParseError(f"root {k} has dimension {z.shape[0]}, expected {n}", k=k)
        cert = None
        if isinstance(r, dict) and r.get("certificate") is not None:
            try:
                cert = Certificate.from_json(r["certificate"])
            except (KeyError, TypeError, ValueError) as exc:
                raise ParseError(f"root {k}: malformed certificate ({exc})", k=k) from None
            expect = 0.5 * cert.beta * cert.mu * cert.nu
            if math.isfinite(expect) and not math.isclose(cert.alpha_hat, expect, rel_tol=1e-9, abs_tol=1e-300):
                raise ParseError(f"root {k}: alpha_hat is not beta*mu*nu/2", k=k)
        out.append((z, cert))
    return d.get("system_hash"), out


def load_roots(path: str | Path, n: int | None = None):
    return parse_roots(read_json(path), n)


def parse_start(d: dict) -> tuple[ExpSumSystem, list[np.ndarray]]:
    """A start pair: ``{"system": SystemFile, "roots": [...]}``."""
    if "system" not in d or "roots" not in d:
        raise ParseError("start file needs 'system' and 'roots'")
    sf = parse_system(d["system"])
    g = sf.require_system()
    _, roots = parse_roots({"version": d.get("version", VERSION), "roots": d["roots"]}, g.n)
    return g, [z for z, _ in roots]


def dumps(obj: dict) -> str:
    return json.dumps(obj, indent=2, allow_nan=False, default=_default)


def _default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return None if not np.isfinite(o) else float(o)
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")
