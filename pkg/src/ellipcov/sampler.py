"""Seeded compound-Gaussian sampling.

Each sample is ``x = sqrt(tau) * v`` with ``v ~ N(0, shape)`` and an
independent positive texture ``tau``.

Random streams
--------------
All randomness comes from :class:`numpy.random.Philox` (a counter-based
generator).  A 64-bit ``seed`` feeds :class:`numpy.random.SeedSequence`, which
is split with ``spawn(2)``: child 0 drives the Gaussian draws, child 1 the
texture.  Two sample sets with the same seed therefore share their Gaussian
part whatever the texture law is.

Per-trial seeds are derived with :func:`derive_seed`, which folds integer keys
into a 64-bit state with the splitmix64 finalizer.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import as_symmetric
from .errors import DegenerateSample, InvalidInput, InvalidShape

_MASK64 = (1 << 64) - 1


def _splitmix64(z: int) -> int:
    z = (z + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_seed(base_seed: int, *keys: int) -> int:
    """Mix ``base_seed`` with integer ``keys`` into a 64-bit seed.

    ``h = splitmix64(base_seed)``, then for every key
    ``h = splitmix64(h ^ splitmix64(key))``.
    """
    h = _splitmix64(int(base_seed) & _MASK64)
    for k in keys:
        h = _splitmix64(h ^ _splitmix64(int(k) & _MASK64))
    return h


@dataclass(frozen=True)
class TextureLaw:
    """Law of the texture ``tau``.

    ``chi_square`` draws ``tau ~ chi2(dof)`` (unnormalized, mean ``dof``);
    ``constant`` fixes ``tau = 1`` and yields Gaussian samples.
    """

    kind: str = "chi_square"
    dof: int = 1

    def __post_init__(self):
        if self.kind not in ("chi_square", "constant"):
            raise InvalidInput(f"unknown texture kind {self.kind!r}")
        if self.kind == "chi_square" and int(self.dof) < 1:
            raise InvalidInput("dof must be >= 1")

    @classmethod
    def chi_square(cls, dof: int = 1):
        return cls("chi_square", int(dof))

    @classmethod
    def constant(cls):
        return cls("constant", 1)

    def draw(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if self.kind == "constant":
            return np.ones(n)
        return rng.chisquare(self.dof, size=n)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "dof": self.dof}

    @classmethod
    def from_dict(cls, d: dict) -> "TextureLaw":
        return cls(d.get("kind", "chi_square"), int(d.get("dof", 1)))


@dataclass(frozen=True, eq=False)
class SampleSet:
    """``n`` samples of dimension ``p`` stored as the rows of ``samples``."""

    samples: np.ndarray
    seed: int | None = None
    texture: TextureLaw | None = None

    def __post_init__(self):
        X = np.asarray(self.samples, dtype=float)
        if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
            raise InvalidInput(f"samples must be an (n, p) array, got shape {X.shape}")
        if not np.all(np.isfinite(X)):
            raise InvalidInput("samples must be finite")
        X.setflags(write=False)
        object.__setattr__(self, "samples", X)

    @property
    def count(self) -> int:
        return self.samples.shape[0]

    @property
    def dim(self) -> int:
        return self.samples.shape[1]


def as_samples(X) -> np.ndarray:
    """Sample matrix ``(n, p)`` from a :class:`SampleSet` or array-like."""
    if isinstance(X, SampleSet):
        return X.samples
    return SampleSet(X).samples


def _factor(shape: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.cholesky(shape)
    except np.linalg.LinAlgError:
        lam, V = np.linalg.eigh(shape)
        return V * np.sqrt(np.maximum(lam, 0.0))


def sample_elliptical(shape, texture: TextureLaw, n: int, seed: int) -> SampleSet:
    """Draw ``n`` compound-Gaussian samples with scatter ``shape``.

    Raises
    ------
    InvalidShape
        If ``shape`` has an eigenvalue below ``-1e-10 * ||shape||_2`` or a
        nonpositive trace.
    """
    C = as_symmetric(shape, "shape")
    if int(n) < 1:
        raise InvalidInput("n must be >= 1")
    n = int(n)
    lam = np.linalg.eigvalsh(C)
    norm = max(abs(lam[0]), abs(lam[-1]))
    if lam[0] < -1e-10 * norm or not np.trace(C) > 0:
        raise InvalidShape(f"shape must be PSD with positive trace (min eigenvalue {lam[0]:.3e})")
    L = _factor(C)
    gauss_ss, tex_ss = np.random.SeedSequence(int(seed) & _MASK64).spawn(2)
    g_rng = np.random.Generator(np.random.Philox(gauss_ss))
    t_rng = np.random.Generator(np.random.Philox(tex_ss))
    p = C.shape[0]
    V = g_rng.standard_normal((n, p)) @ L.T
    tau = texture.draw(t_rng, n)
    X = np.sqrt(tau)[:, None] * V
    # zero samples are a measure-zero event; redraw from the same streams
    bad = ~np.any(X != 0, axis=1)
    while np.any(bad):
        k = int(bad.sum())
        X[bad] = np.sqrt(texture.draw(t_rng, k))[:, None] * (g_rng.standard_normal((k, p)) @ L.T)
        bad = ~np.any(X != 0, axis=1)
    return SampleSet(X, int(seed), texture)


def normalize_samples(X: SampleSet) -> SampleSet:
    """Project every sample onto the unit sphere."""
    S = as_samples(X)
    norms = np.linalg.norm(S, axis=1)
    if np.any(norms == 0):
        raise DegenerateSample(f"sample {int(np.argmin(norms))} is zero")
    out = S / norms[:, None]
    if isinstance(X, SampleSet):
        return SampleSet(out, X.seed, X.texture)
    return SampleSet(out)
