"""Built-in algebras (``rn:<d>``, ``heis3``, ``aff2``) and algebra-file loading.

All catalog groups are simply connected and exponential, so ``exp`` is a
global diffeomorphism and every subgroup ``N`` appearing in a splitting is
closed (for ``rn`` and ``heis3`` every connected subgroup is closed; for
``aff2`` the only candidate is the normal line ``exp(R Y)``).
"""

from __future__ import annotations

import re
from pathlib import Path

import numpy as np

from .errors import IndexOutOfRange, ParseError
from .lie import LieAlgebraTable

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib


def _unit(n, i, j):
    E = np.zeros((n, n))
    E[i, j] = 1.0
    return E


def rn(d):
    """Abelian ``R^d`` as translations ``x -> [[I, x], [0, 1]]``."""
    if d < 1:
        raise ValueError("rn needs d >= 1")
    rep = np.stack([_unit(d + 1, i, d) for i in range(d)])
    return LieAlgebraTable(
        dim=d,
        structure=(),
        rep_basis=rep,
        basis_names=tuple(f"x{i + 1}" for i in range(d)),
        nilpotency_class=1,
        exp_global=True,
        name=f"rn:{d}",
        notes="abelian; every connected subgroup is a closed linear subspace",
    )


def heis3():
    """Heisenberg algebra ``[P, Q] = R`` as strictly upper-triangular 3x3 matrices."""
    rep = np.stack([_unit(3, 0, 1), _unit(3, 1, 2), _unit(3, 0, 2)])
    return LieAlgebraTable(
        dim=3,
        structure=((0, 1, 2, 1.0), (1, 0, 2, -1.0)),
        rep_basis=rep,
        basis_names=("P", "Q", "R"),
        nilpotency_class=2,
        exp_global=True,
        name="heis3",
        notes="simply connected nilpotent; connected subgroups are closed",
    )


def aff2():
    """The ``ax + b`` algebra ``[X, Y] = Y`` as ``[[a, b], [0, 0]]`` matrices."""
    rep = np.stack([_unit(2, 0, 0), _unit(2, 0, 1)])
    return LieAlgebraTable(
        dim=2,
        structure=((0, 1, 1, 1.0), (1, 0, 1, -1.0)),
        rep_basis=rep,
        basis_names=("X", "Y"),
        nilpotency_class=None,
        exp_global=True,
        name="aff2",
        notes="identity component of the affine group of the line; exp(R Y) is closed",
    )


_RN = re.compile(r"^rn:(\d+)$")


def get_algebra(name):
    """Catalog lookup by name: ``rn:<d>``, ``heis3`` or ``aff2``."""
    m = _RN.match(name)
    if m:
        return rn(int(m.group(1)))
    if name == "heis3":
        return heis3()
    if name == "aff2":
        return aff2()
    raise KeyError(f"unknown catalog algebra {name!r}; expected rn:<d>, heis3 or aff2")


def algebra_from_dict(data, name="custom"):
    """Build a table from the algebra-file fields (1-based structure indices)."""
    problems = []
    try:
        dim = int(data["dim"])
    except (KeyError, TypeError, ValueError):
        raise ParseError("algebra: field 'dim' missing or not an integer")
    entries = []
    for pos, entry in enumerate(data.get("structure", [])):
        if len(entry) != 4:
            raise ParseError(f"algebra.structure[{pos}]: expected [i, j, k, c], got {entry!r}")
        i, j, k, c = entry
        for idx in (i, j, k):
            if int(idx) != idx or not 1 <= int(idx) <= dim:
                raise IndexOutOfRange(f"algebra.structure[{pos}] = {entry!r}: index outside [1, {dim}]")
        entries.append((int(i) - 1, int(j) - 1, int(k) - 1, float(c)))
    if "rep_basis" not in data:
        problems.append("algebra: field 'rep_basis' missing")
        raise ParseError("; ".join(problems))
    mats = []
    for pos, m in enumerate(data["rep_basis"]):
        arr = np.asarray(m, dtype=float)
        if arr.ndim == 1:
            n = int(round(np.sqrt(arr.size)))
            if n * n != arr.size:
                raise ParseError(f"algebra.rep_basis[{pos}]: {arr.size} entries is not a square matrix")
            arr = arr.reshape(n, n)
        mats.append(arr)
    return LieAlgebraTable(
        dim=dim,
        structure=tuple(entries),
        rep_basis=np.stack(mats) if mats else np.zeros((0, 1, 1)),
        basis_names=tuple(data.get("basis_names", ())),
        nilpotency_class=data.get("nilpotency_class"),
        exp_global=bool(data.get("exp_global", True)),
        name=str(data.get("name", name)),
    )


def algebra_to_dict(table):
    """Inverse of :func:`algebra_from_dict` (1-based indices, nested-row matrices)."""
    out = {
        "name": table.name,
        "dim": table.dim,
        "structure": [[i + 1, j + 1, k + 1, float(c)] for i, j, k, c in table.structure],
        "rep_basis": [m.tolist() for m in table.rep_basis],
        "basis_names": list(table.basis_names),
        "exp_global": bool(table.exp_global),
    }
    if table.nilpotency_class is not None:
        out["nilpotency_class"] = int(table.nilpotency_class)
    return out


def load_algebra(path):
    """Read an algebra definition file (TOML)."""
    path = Path(path)
    try:
        data = tomllib.loads(path.read_text(encoding="utf-8"))
    except tomllib.TOMLDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    return algebra_from_dict(data.get("algebra", data), name=path.stem)
