"""Uniform rectilinear grids, sampled fields and centered difference stencils."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import EmptyInterior, GridTooSmall, NonFinite

# second-derivative and first-derivative stencils, offsets -r..r
_D2 = {
    2: np.array([1.0, -2.0, 1.0]),
    4: np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0,
}
_D1 = {
    2: np.array([-1.0, 0.0, 1.0]) / 2.0,
    4: np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0,
}


@dataclass(frozen=True)
class Axis:
    min: float
    max: float
    n: int

    def __post_init__(self):
        if not self.max > self.min:
            raise ValueError(f"axis needs max > min, got [{self.min}, {self.max}]")
        if int(self.n) != self.n or self.n < 2:
            raise ValueError(f"axis needs at least 2 nodes, got n={self.n}")
        object.__setattr__(self, "n", int(self.n))

    @property
    def h(self) -> float:
        return (self.max - self.min) / (self.n - 1)

    def nodes(self) -> np.ndarray:
        return np.linspace(self.min, self.max, self.n)


@dataclass(frozen=True)
class GridSpec:
    axes: tuple

    def __post_init__(self):
        axes = tuple(a if isinstance(a, Axis) else Axis(*a) for a in self.axes)
        if not 1 <= len(axes) <= 3:
            raise ValueError(f"grid dimension must be 1..3, got {len(axes)}")
        object.__setattr__(self, "axes", axes)

    @classmethod
    def uniform(cls, lo: float, hi: float, n: int, dim: int = 1) -> "GridSpec":
        return cls(tuple(Axis(lo, hi, n) for _ in range(dim)))

    @property
    def dim(self) -> int:
        return len(self.axes)

    @property
    def shape(self) -> tuple:
        return tuple(a.n for a in self.axes)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @property
    def h(self) -> tuple:
        return tuple(a.h for a in self.axes)

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.h))

    def coords(self) -> np.ndarray:
        """Node coordinates, shape ``(dim, *shape)``."""
        return np.stack(np.meshgrid(*(a.nodes() for a in self.axes), indexing="ij"))

    def node_coords(self, flat: int) -> np.ndarray:
        idx = np.unravel_index(flat, self.shape)
        return np.array([a.min + i * a.h for a, i in zip(self.axes, idx)])

    def flat_index(self, point: Sequence[float]) -> int:
        """Row-major index of the node at ``point`` (nearest node)."""
        idx = tuple(int(round((p - a.min) / a.h)) for p, a in zip(point, self.axes))
        return int(np.ravel_multi_index(idx, self.shape))

    def refined(self, factor: int = 2) -> "GridSpec":
        """Same box with ``(n - 1)`` multiplied by ``factor`` on every axis."""
        return GridSpec(tuple(Axis(a.min, a.max, (a.n - 1) * factor + 1) for a in self.axes))

    def summary(self) -> dict:
        return {"axes": [[a.min, a.max, a.n] for a in self.axes]}

    def to_json(self) -> dict:
        return self.summary()


@dataclass(frozen=True)
class Field:
    """Values on a grid, stored as an ndarray of ``grid.shape`` (last axis fastest)."""

    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.shape != self.grid.shape:
            raise ValueError(f"values shape {v.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(v)):
            raise NonFinite("field contains NaN or Inf")
        v = v.copy()
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def is_complex(self) -> bool:
        return np.iscomplexobj(self.values)

    def flat(self) -> np.ndarray:
        return self.values.reshape(-1)


# aliases matching the two roles a Field plays
ScalarField = Field
ComplexField = Field


@dataclass(frozen=True)
class InteriorMask:
    margin: int = 1

    def array(self, grid: GridSpec) -> np.ndarray:
        keep = np.zeros(grid.shape, dtype=bool)
        sl = tuple(slice(self.margin, n - self.margin) for n in grid.shape)
        keep[sl] = True
        return keep

    @classmethod
    def for_order(cls, order: int) -> "InteriorMask":
        return cls(order // 2)


def sample(evaluator: Callable, grid: GridSpec, t: float = 0.0) -> Field:
    """Evaluate ``evaluator(coords, t)`` on every node.

    ``coords`` has shape ``(dim, *grid.shape)``; the evaluator must broadcast.
    """
    values = np.asarray(evaluator(grid.coords(), t))
    values = np.broadcast_to(values, grid.shape)
    if not np.all(np.isfinite(values)):
        raise NonFinite("evaluator produced non-finite values")
    return Field(grid, values)


def _check_order(order: int, grid: GridSpec):
    if order not in _D2:
        raise ValueError(f"stencil order must be 2 or 4, got {order}")
    need = order + 1
    if min(grid.shape) < need:
        raise GridTooSmall(f"order-{order} stencil needs n >= {need} per axis, grid is {grid.shape}")


def _apply(values: np.ndarray, weights: np.ndarray, axis: int) -> np.ndarray:
    """Centered stencil along ``axis``; result has the full shape, edges left 0."""
    r = len(weights) // 2
    n = values.shape[axis]
    out = np.zeros(values.shape, dtype=np.result_type(values, float))
    inner = [slice(None)] * values.ndim
    inner[axis] = slice(r, n - r)
    acc = 0
    for j, w in enumerate(weights):
        if w == 0:
            continue
        src = [slice(None)] * values.ndim
        src[axis] = slice(j, n - 2 * r + j)
        acc = acc + w * values[tuple(src)]
    out[tuple(inner)] = acc
    return out


def _masked(values: np.ndarray, grid: GridSpec, order: int) -> np.ndarray:
    keep = InteriorMask.for_order(order).array(grid)
    return np.where(keep, values, 0)


def fd_laplacian(field: Field, order: int = 2) -> Field:
    grid = field.grid
    _check_order(order, grid)
    total = 0
    for ax, h in enumerate(grid.h):
        total = total + _apply(field.values, _D2[order], ax) / h**2
    return Field(grid, _masked(total, grid, order))


def fd_second(field: Field, axis: int, order: int = 2) -> Field:
    """Single-axis second derivative."""
    grid = field.grid
    _check_order(order, grid)
    return Field(grid, _masked(_apply(field.values, _D2[order], axis) / grid.h[axis] ** 2, grid, order))


def fd_gradient(field: Field, order: int = 2) -> list:
    grid = field.grid
    _check_order(order, grid)
    return [
        Field(grid, _masked(_apply(field.values, _D1[order], ax) / h, grid, order))
        for ax, h in enumerate(grid.h)
    ]


def stencil_center_weight(order: int) -> float:
    """Largest absolute weight in the second-derivative stencil (times h**2)."""
    return float(np.max(np.abs(_D2[order])))


def norms(field: Field, mask: InteriorMask) -> tuple:
    """Discrete L2 (``sqrt(sum |v|**2 * cell volume)``) and max norm over the interior."""
    keep = mask.array(field.grid)
    if not keep.any():
        raise EmptyInterior(f"mask margin {mask.margin} leaves no interior nodes on {field.grid.shape}")
    v = np.abs(field.values[keep])
    return float(np.sqrt(np.sum(v**2) * field.grid.cell_volume)), float(np.max(v))


AXIS_NAMES = ("x", "y", "z")


def write_field_csv(stream, fields, times, value_names) -> None:
    """Write ``x[,y[,z]],t,<value_names>`` rows, one per node per time.

    ``fields`` is a list of Fields (one per time).  Complex fields expand to
    ``re,im`` columns when ``value_names`` is ``("re", "im")``.
    """
    writer = csv.writer(stream, lineterminator="\n")
    if not fields:
        return
    grid = fields[0].grid
    writer.writerow(list(AXIS_NAMES[: grid.dim]) + ["t"] + list(value_names))
    X = grid.coords().reshape(grid.dim, -1)
    for field, t in zip(fields, times):
        flat = field.flat()
        for i in range(grid.size):
            row = [_fmt(c) for c in X[:, i]] + [_fmt(t)]
            if field.is_complex:
                row += [_fmt(flat[i].real), _fmt(flat[i].imag)]
            else:
                row.append(_fmt(flat[i]))
            writer.writerow(row)


def _fmt(v) -> str:
    return repr(float(v))
