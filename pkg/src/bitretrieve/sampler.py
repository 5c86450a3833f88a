"""Reproducible sampling of Haar-uniform projections and unit vectors.

Randomness model
----------------
Every draw is keyed by a SeedStream, a (master_seed, path) pair. A
stream maps to an independently parameterized PCG64 generator whose
128-bit state and odd increment are derived from a splitmix64-chained
hash of the master seed and the path components, so

* distinct paths under one master seed give statistically independent
  streams (distinct increments select distinct PCG64 sequences), and
* a fixed (master_seed, path) replays the exact same scalar sequence
  regardless of thread count or evaluation order.

Gaussian variates come from numpy's Generator.standard_normal
(ziggurat transform of the PCG64 bit stream); together with the hash
above this pins the exact sequence of every stream for a given numpy
version, which is the reproducibility contract of the experiment
harness. Each stream is consumed by exactly one draw call.

Projections are generated by orthonormalizing a d x k Gaussian matrix
(a QR factorization in which the phase of each R diagonal entry is
absorbed into Q, here realized by two passes of classical
Gram-Schmidt, which produces exactly the positive-diagonal Q factor);
the projection onto the column span is then Haar-uniform on the set of
rank-k projections.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import FieldKind, InvalidInput, OrthogonalProjection, UnitVector

__all__ = [
    "SeedStream",
    "MeasurementEnsemble",
    "sample_unit_vector",
    "sample_haar_projection",
    "sample_ensemble",
]

_MASK = (1 << 64) - 1
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_GAMMA = 0x9E3779B97F4A7C15
_SALT_H = 0xD1B54A32D192ED03
_SALT_G = 0x8CB92BA72F3D8DD7
_SALT_S0 = 0xA0761D6478BD642F
_SALT_S1 = 0xE7037ED1A0B428DB
_SALT_I0 = 0x8EBC6AF09C88C6E3
_SALT_I1 = 0x589965CC75374CC3

_ORTHO_PASSES = 2
_FRAME_TOL = 1e-12
_CHUNK = 8192


def _mix64(z: int) -> int:
    """splitmix64 finalizer on python ints, wrapping at 64 bits."""
    z &= _MASK
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK
    return z ^ (z >> 31)


def _child_words(h: int, g: int, index: int) -> tuple[int, int]:
    index &= _MASK
    h2 = _mix64(h ^ _mix64((index * _GAMMA + _SALT_H) & _MASK))
    g2 = _mix64((g + _mix64((index * _GAMMA + _SALT_G) & _MASK)) & _MASK)
    return h2, g2


def _root_words(master_seed: int) -> tuple[int, int]:
    master_seed &= _MASK
    return _mix64(master_seed + _SALT_H), _mix64((master_seed * _GAMMA + _SALT_G) & _MASK)


def _pcg_state_inc(h: int, g: int) -> tuple[int, int]:
    state = (_mix64(h ^ _SALT_S0) << 64) | _mix64(g ^ _SALT_S1)
    inc = ((_mix64((h + _SALT_I0) & _MASK) << 64) | _mix64((g + _SALT_I1) & _MASK)) | 1
    return state, inc


def _mix64_array(z: np.ndarray) -> np.ndarray:
    z = z.astype(np.uint64, copy=True)
    z ^= z >> np.uint64(30)
    z *= np.uint64(_MIX1)
    z ^= z >> np.uint64(27)
    z *= np.uint64(_MIX2)
    z ^= z >> np.uint64(31)
    return z


def _child_words_vector(h: int, g: int, indices: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    idx = indices.astype(np.uint64, copy=False)
    hs = _mix64_array(np.uint64(h) ^ _mix64_array(idx * np.uint64(_GAMMA) + np.uint64(_SALT_H)))
    gs = _mix64_array(np.uint64(g) + _mix64_array(idx * np.uint64(_GAMMA) + np.uint64(_SALT_G)))
    return hs, gs


@dataclass(frozen=True)
class SeedStream:
    """A splittable random stream identified by (master_seed, path)."""

    master_seed: int
    path: tuple[int, ...] = ()

    def child(self, *indices: int) -> "SeedStream":
        """The sub-stream at this path extended by the given indices."""
        return SeedStream(self.master_seed, self.path + tuple(int(i) for i in indices))

    def _words(self) -> tuple[int, int]:
        h, g = _root_words(int(self.master_seed))
        for comp in self.path:
            h, g = _child_words(h, g, int(comp))
        return h, g

    def generator(self) -> np.random.Generator:
        state, inc = _pcg_state_inc(*self._words())
        bitgen = np.random.PCG64()
        full = bitgen.state
        full["state"] = {"state": state, "inc": inc}
        full["has_uint32"] = 0
        full["uinteger"] = 0
        bitgen.state = full
        return np.random.Generator(bitgen)

    def label(self) -> str:
        return "/".join(str(i) for i in self.path) if self.path else "-"


def _gaussian(field: FieldKind, d: int, k: int, rng: np.random.Generator) -> np.ndarray:
    """A d x k matrix of i.i.d. standard Gaussians; for C, real and
    imaginary parts are each standard Gaussian."""
    if field is FieldKind.REAL:
        return rng.standard_normal((d, k))
    parts = rng.standard_normal((2, d, k))
    return parts[0] + 1j * parts[1]


def sample_unit_vector(field: FieldKind, d: int, stream: SeedStream) -> UnitVector:
    """A uniformly distributed unit vector: g/||g|| with Gaussian g."""
    if d < 1:
        raise InvalidInput(f"sample_unit_vector: dimension must be >= 1, got {d}")
    rng = stream.generator()
    if field is FieldKind.REAL:
        g = rng.standard_normal(d)
    else:
        parts = rng.standard_normal((2, d))
        g = parts[0] + 1j * parts[1]
    return UnitVector(field, g)


def _orthonormalize_batch(g: np.ndarray) -> np.ndarray:
    """Orthonormalize the columns of each matrix in a (m, d, k) stack.

    Two passes of classical Gram-Schmidt; equivalent to the thin QR
    factor normalized to a positive-diagonal R.
    """
    q = np.array(g)
    k = q.shape[2]
    for _ in range(_ORTHO_PASSES):
        for i in range(k):
            v = q[:, :, i]
            if i:
                prev = q[:, :, :i]
                coef = np.einsum("mdi,md->mi", prev.conj(), v)
                v -= np.einsum("mdi,mi->md", prev, coef)
            norms = np.linalg.norm(v, axis=1)
            if float(norms.min(initial=np.inf)) == 0.0:
                raise InvalidInput("orthonormalization hit a rank-deficient Gaussian draw")
            v /= norms[:, None]
    return q


def sample_haar_projection(
    field: FieldKind, k: int, d: int, stream: SeedStream
) -> OrthogonalProjection:
    """A Haar-uniform rank-k orthogonal projection on the d-dimensional space.

    The distribution is invariant under conjugation by any fixed unitary.
    """
    if k < 1 or k > d:
        raise InvalidInput(f"sample_haar_projection: need 1 <= k <= d, got k={k}, d={d}")
    g = _gaussian(field, d, k, stream.generator())
    q = _orthonormalize_batch(g[None, :, :])[0]
    mat = q @ q.conj().T
    mat = (mat + mat.conj().T) / 2.0
    return OrthogonalProjection(field, k, mat)


@dataclass(frozen=True, eq=False)
class MeasurementEnsemble:
    """A sequence of m rank-n orthogonal projections on a 2n-dimensional space.

    Elements are stored as orthonormal frames: `frames[j]` is the n x 2n
    matrix whose rows are an orthonormal basis of the j-th range, so the
    j-th projection matrix is frames[j]^H frames[j]. `projection(j)`
    materializes an element as a fully validated typed value.
    """

    field: FieldKind
    n: int
    frames: np.ndarray

    def __post_init__(self) -> None:
        frames = np.asarray(self.frames, dtype=self.field.dtype)
        d = 2 * self.n
        if frames.ndim != 3 or frames.shape[1:] != (self.n, d):
            raise InvalidInput(
                f"MeasurementEnsemble: expected frames of shape (m, {self.n}, {d}),"
                f" got {frames.shape}"
            )
        if frames.shape[0] < 1:
            raise InvalidInput("MeasurementEnsemble: need at least one projection")
        eye = np.eye(self.n)
        for start in range(0, frames.shape[0], _CHUNK):
            block = frames[start : start + _CHUNK]
            gram = np.einsum("mkd,mld->mkl", block, block.conj())
            dev = float(np.max(np.abs(gram - eye), initial=0.0))
            if dev > _FRAME_TOL:
                raise InvalidInput(f"ensemble frame not orthonormal (deviation {dev:.2e})")
        frames.setflags(write=False)
        object.__setattr__(self, "frames", frames)

    @property
    def m(self) -> int:
        return int(self.frames.shape[0])

    @property
    def dim(self) -> int:
        return 2 * self.n

    def __len__(self) -> int:
        return self.m

    def flat_frames(self) -> np.ndarray:
        """(m*n, 2n) view stacking all frame rows."""
        return self.frames.reshape(self.m * self.n, self.dim)

    def matrix(self, j: int) -> np.ndarray:
        f = self.frames[j]
        mat = f.conj().T @ f
        return (mat + mat.conj().T) / 2.0

    def projection(self, j: int) -> OrthogonalProjection:
        return OrthogonalProjection(self.field, self.n, self.matrix(j))

    def matrix_block(self, start: int, stop: int) -> np.ndarray:
        """Materialized projection matrices for elements start..stop-1."""
        block = self.frames[start:stop]
        return np.einsum("mka,mkb->mab", block.conj(), block)

    def compression(self, size: int) -> np.ndarray:
        """Top-left size x size blocks of every projection, shape (m, size, size)."""
        cols = self.frames[:, :, :size]
        return np.einsum("mka,mkb->mab", cols.conj(), cols)


def sample_ensemble(field: FieldKind, n: int, m: int, stream: SeedStream) -> MeasurementEnsemble:
    """m independent Haar-uniform rank-n projections in dimension 2n.

    Element j is drawn from the sub-stream `stream.child(j)`, so each
    element can be replayed independently and the ensemble is identical
    no matter how the generation work is scheduled.
    """
    if n < 1:
        raise InvalidInput(f"sample_ensemble: n must be >= 1, got {n}")
    if m < 1:
        raise InvalidInput(f"sample_ensemble: m must be >= 1, got {m}")
    d, k = 2 * n, n
    h, g = stream._words()
    hs, gs = _child_words_vector(h, g, np.arange(m, dtype=np.uint64))
    s_hi = _mix64_array(hs ^ np.uint64(_SALT_S0))
    s_lo = _mix64_array(gs ^ np.uint64(_SALT_S1))
    i_hi = _mix64_array(hs + np.uint64(_SALT_I0))
    i_lo = _mix64_array(gs + np.uint64(_SALT_I1))

    bitgen = np.random.PCG64()
    rng = np.random.Generator(bitgen)
    template = bitgen.state
    template["has_uint32"] = 0
    template["uinteger"] = 0

    gauss = np.empty((m, d, k), dtype=field.dtype)
    complex_field = field is FieldKind.COMPLEX
    for j in range(m):
        template["state"] = {
            "state": (int(s_hi[j]) << 64) | int(s_lo[j]),
            "inc": ((int(i_hi[j]) << 64) | int(i_lo[j])) | 1,
        }
        bitgen.state = template
        if complex_field:
            parts = rng.standard_normal((2, d, k))
            gauss[j] = parts[0] + 1j * parts[1]
        else:
            gauss[j] = rng.standard_normal((d, k))

    frames = np.empty((m, k, d), dtype=field.dtype)
    for start in range(0, m, _CHUNK):
        stop = min(start + _CHUNK, m)
        q = _orthonormalize_batch(gauss[start:stop])
        frames[start:stop] = np.conjugate(np.swapaxes(q, 1, 2))
    return MeasurementEnsemble(field, n, frames)
