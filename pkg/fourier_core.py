"""
Truncated Fourier-lattice fields for the resonant NLS laboratory.
Coefficients are normalized so that the pointwise product of two fields is the
plain convolution of their coefficient arrays.
"""

import json
import logging
import math
import numbers
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np
from scipy import fft as sp_fft
from scipy import signal

import config
from exceptions import LatticeError, PaddingError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LatticeSpec:
    """
    Base lattice {j in Z^d : |j|_inf <= K} plus the padding budget for products.
    """

    d: int
    K: int
    pad_factor: int = config.DEFAULT_PAD_FACTOR

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 1:
            raise LatticeError(f"dimension must be a positive integer, got {self.d}")
        if int(self.K) != self.K or self.K < 1:
            raise LatticeError(f"cutoff K must be a positive integer, got {self.K}")
        if int(self.pad_factor) != self.pad_factor or self.pad_factor < 2:
            raise LatticeError(f"pad_factor must be an integer >= 2, got {self.pad_factor}")

    @property
    def pad_extent(self):
        """Largest extent a product chain may reach without aliasing."""
        return self.pad_factor * self.K

    @property
    def grid_size(self):
        """Odd synthesis grid size per axis, at least pad_factor*(2K+1)."""
        n = self.pad_factor * (2 * self.K + 1)
        return n if n % 2 else n + 1

    @property
    def grid_extent(self):
        return (self.grid_size - 1) // 2

    def to_dict(self):
        return {'d': self.d, 'K': self.K, 'pad_factor': self.pad_factor}


@dataclass(frozen=True)
class NormParams:
    """
    Parameters (s, R) of the weighted norm with symbol max{R, |j|}^s.
    """

    s: float
    R: float

    def __post_init__(self):
        if self.s < 0:
            raise ValueError(f"regularity s must be >= 0, got {self.s}")
        if not self.R > 1:
            raise ValueError(f"weight floor R must exceed 1, got {self.R}")

    def with_s(self, s):
        return replace(self, s=s)


@lru_cache(maxsize=128)
def lattice_vectors(d, extent):
    """
    Integer frequency vectors of the cube |j|_inf <= extent.

    Returns:
        numpy.ndarray: read-only array of shape (2*extent+1,)*d + (d,)
    """
    axis = np.arange(-extent, extent + 1)
    grids = np.meshgrid(*([axis] * d), indexing='ij')
    vectors = np.stack(grids, axis=-1)
    vectors.setflags(write=False)
    return vectors


@lru_cache(maxsize=128)
def lattice_sq_norm(d, extent):
    """Squared Euclidean length |j|^2 on the cube, as a read-only integer array."""
    sq = np.sum(lattice_vectors(d, extent).astype(np.int64) ** 2, axis=-1)
    sq.setflags(write=False)
    return sq


class FourierField:
    """
    Immutable complex coefficients on a centered cube |j|_inf <= extent.

    The LatticeSpec fixes the base lattice (extent K) and the padding budget. Products
    and para-products return fields on larger cubes, never beyond what the
    operation's exact support needs.
    """

    __array_ufunc__ = None  # let numpy scalars defer to __rmul__

    def __init__(self, spec, coeffs, real_valued=False):
        """
        Initialize a field.

        Args:
            spec (LatticeSpec): Base lattice and padding budget
            coeffs (array-like): Centered coefficient cube of odd side length
            real_valued (bool): Flag asserting conj(u_hat(-j)) = u_hat(j)
        """
        arr = np.array(coeffs, dtype=np.complex128)
        if arr.ndim != spec.d:
            raise LatticeError(f"coefficient array has {arr.ndim} axes, lattice has d={spec.d}")
        side = arr.shape[0]
        if side % 2 == 0 or any(n != side for n in arr.shape):
            raise LatticeError(f"coefficients must form a centered odd cube, got shape {arr.shape}")
        arr.setflags(write=False)
        self.spec = spec
        self.coeffs = arr
        if real_valued and not self.is_real_valued():
            raise LatticeError("field flagged real-valued violates conjugate symmetry")
        self.real_valued = bool(real_valued)

    @classmethod
    def zeros(cls, spec, extent=None):
        e = spec.K if extent is None else extent
        return cls(spec, np.zeros((2 * e + 1,) * spec.d, dtype=np.complex128), real_valued=True)

    @property
    def extent(self):
        return (self.coeffs.shape[0] - 1) // 2

    def frequencies(self):
        return lattice_vectors(self.spec.d, self.extent)

    def sq_norms(self):
        return lattice_sq_norm(self.spec.d, self.extent)

    def coefficient(self, j):
        idx = _as_index(j, self.spec.d)
        if any(abs(c) > self.extent for c in idx):
            return 0j
        return complex(self.coeffs[tuple(c + self.extent for c in idx)])

    def resize(self, extent):
        """
        Zero-pad or truncate to the cube |j|_inf <= extent.

        Args:
            extent (int): Target extent

        Returns:
            FourierField: Field on the new cube
        """
        e = self.extent
        if extent == e:
            return self
        if extent < 0:
            raise LatticeError(f"extent must be >= 0, got {extent}")
        if extent > e:
            arr = np.pad(self.coeffs, extent - e)
        else:
            cut = e - extent
            window = tuple(slice(cut, cut + 2 * extent + 1) for _ in range(self.spec.d))
            arr = self.coeffs[window]
            dropped = np.sum(np.abs(self.coeffs) ** 2) - np.sum(np.abs(arr) ** 2)
            if dropped > 0:
                logger.debug("truncation to extent %d dropped L2 mass %.3e", extent, dropped)
        return FourierField(self.spec, arr, self.real_valued)

    def truncation_loss(self, extent):
        """L2 norm of the modes a resize to `extent` would discard."""
        if extent >= self.extent:
            return 0.0
        kept = self.resize(extent)
        return math.sqrt(max(norm(self, 'L2') ** 2 - norm(kept, 'L2') ** 2, 0.0))

    def conj(self):
        """Conjugate field, with coefficients conj(u_hat(-j))."""
        return FourierField(self.spec, np.conj(np.flip(self.coeffs)), self.real_valued)

    def is_real_valued(self, tol=config.REAL_SYMMETRY_TOL):
        diff = self.coeffs - np.conj(np.flip(self.coeffs))
        scale = max(1.0, float(np.max(np.abs(self.coeffs), initial=0.0)))
        return float(np.max(np.abs(diff), initial=0.0)) <= tol * scale

    def _aligned(self, other):
        check_same_spec(self, other)
        e = max(self.extent, other.extent)
        return self.resize(e).coeffs, other.resize(e).coeffs

    def __add__(self, other):
        if not isinstance(other, FourierField):
            return NotImplemented
        a, b = self._aligned(other)
        return FourierField(self.spec, a + b, self.real_valued and other.real_valued)

    def __sub__(self, other):
        if not isinstance(other, FourierField):
            return NotImplemented
        a, b = self._aligned(other)
        return FourierField(self.spec, a - b, self.real_valued and other.real_valued)

    def __neg__(self):
        return FourierField(self.spec, -self.coeffs, self.real_valued)

    def __mul__(self, scalar):
        if not isinstance(scalar, numbers.Number):
            return NotImplemented
        keeps_real = self.real_valued and complex(scalar).imag == 0
        return FourierField(self.spec, self.coeffs * scalar, keeps_real)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        if not isinstance(scalar, numbers.Number):
            return NotImplemented
        return self * (1.0 / scalar)

    def __repr__(self):
        return (f"FourierField(d={self.spec.d}, K={self.spec.K}, extent={self.extent}, "
                f"l2={norm(self, 'L2'):.3e})")


def check_same_spec(u, v):
    if u.spec != v.spec:
        raise LatticeError(f"fields live on different lattice specs: {u.spec} vs {v.spec}")


def _as_index(j, d):
    idx = (int(j),) if isinstance(j, numbers.Integral) else tuple(int(c) for c in j)
    if len(idx) != d:
        raise LatticeError(f"index {j} does not have {d} components")
    return idx


def make_field(spec, entries, real_valued=False):
    """
    Build a field on the base lattice from a sparse mapping j -> amplitude.

    Args:
        spec (LatticeSpec): Target lattice
        entries (dict): Mapping from int (d=1) or tuple to complex amplitude
        real_valued (bool): Flag the result as real-valued

    Returns:
        FourierField: Field with exactly the given coefficients
    """
    arr = np.zeros((2 * spec.K + 1,) * spec.d, dtype=np.complex128)
    for j, value in entries.items():
        idx = _as_index(j, spec.d)
        if any(abs(c) > spec.K for c in idx):
            raise LatticeError(f"index {j} lies outside the lattice |j|_inf <= {spec.K}")
        arr[tuple(c + spec.K for c in idx)] = complex(value)
    return FourierField(spec, arr, real_valued)


def random_field(spec, rng, j_min=0.0, j_max=None, decay=0.0, extent=None,
                 amplitude=1.0, real_valued=False):
    """
    Complex Gaussian coefficients on the annulus j_min <= |j| <= j_max,
    scaled by |j|^(-decay) (the zero mode keeps weight 1).
    """
    e = spec.K if extent is None else extent
    top = e * math.sqrt(spec.d) if j_max is None else j_max
    shape = (2 * e + 1,) * spec.d
    r = np.sqrt(lattice_sq_norm(spec.d, e))
    draws = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    weights = np.where(r > 0, r, 1.0) ** (-float(decay))
    arr = amplitude * draws * weights * ((r >= j_min) & (r <= top))
    if real_valued:
        arr = 0.5 * (arr + np.conj(np.flip(arr)))
    return FourierField(spec, arr, real_valued)


def to_grid(u, n=None):
    """
    Synthesize u(x) = sum_j u_hat(j) e^{ij.x} on the uniform n^d grid.

    Args:
        u (FourierField): Field to synthesize
        n (int): Grid points per axis, defaults to the spec's padded grid

    Returns:
        numpy.ndarray: Complex grid values
    """
    n = u.spec.grid_size if n is None else n
    if n < 2 * u.extent + 1:
        raise PaddingError(f"grid of {n} points cannot resolve extent {u.extent}",
                           required_pad_factor=math.ceil((2 * u.extent + 1) / (2 * u.spec.K + 1)))
    idx = np.arange(-u.extent, u.extent + 1) % n
    full = np.zeros((n,) * u.spec.d, dtype=np.complex128)
    full[np.ix_(*([idx] * u.spec.d))] = u.coeffs
    return sp_fft.ifftn(full, norm='forward')


def from_grid(values, spec, extent):
    """Analyze grid values back to coefficients on |j|_inf <= extent."""
    n = values.shape[0]
    if n < 2 * extent + 1:
        raise PaddingError(f"grid of {n} points cannot resolve extent {extent}",
                           required_pad_factor=math.ceil((2 * extent + 1) / (2 * spec.K + 1)))
    full = sp_fft.fftn(values, norm='forward')
    idx = np.arange(-extent, extent + 1) % n
    return FourierField(spec, full[np.ix_(*([idx] * spec.d))])


def multiply(u, v, extent=None):
    """
    Exact product u*v through the zero-padded transform.

    Args:
        u (FourierField): First factor
        v (FourierField): Second factor
        extent (int): Optional target extent; default keeps the full support

    Returns:
        FourierField: Product coefficients
    """
    check_same_spec(u, v)
    exact = u.extent + v.extent
    if exact > u.spec.pad_extent:
        required = math.ceil(exact / u.spec.K)
        raise PaddingError(
            f"product support {exact} exceeds padded extent {u.spec.pad_extent}; "
            f"pad_factor >= {required} required", required_pad_factor=required)
    n = u.spec.grid_size
    product = from_grid(to_grid(u, n) * to_grid(v, n), u.spec, exact)
    if extent is not None:
        product = product.resize(extent)
    return product


def direct_convolution(u, v):
    """Reference product by direct coefficient convolution."""
    check_same_spec(u, v)
    return FourierField(u.spec, signal.convolve(u.coeffs, v.coeffs, mode='full', method='direct'))


def power_nonlinearity(u, p, sign=1):
    """
    Compute sign*|u|^{2p} u as u * (u conj(u))^p with exact products.

    Args:
        u (FourierField): Field
        p (int): Power, positive integer
        sign (int): +1 or -1

    Returns:
        FourierField: Nonlinearity on extent (2p+1)*u.extent
    """
    if int(p) != p or p < 1:
        raise ValueError(f"power p must be a positive integer, got {p}")
    if sign not in (1, -1):
        raise ValueError(f"sign must be +1 or -1, got {sign}")
    require_padding(u, 2 * p + 1, f"|u|^{2 * p}u")
    modulus = multiply(u, u.conj())
    result = u
    for _ in range(p):
        result = multiply(result, modulus)
    return result if sign == 1 else -result


def require_padding(u, factors, what="product chain"):
    """Raise PaddingError unless `factors` copies of u multiply without aliasing."""
    needed = factors * u.extent
    if needed > u.spec.pad_extent:
        required = math.ceil(needed / u.spec.K)
        raise PaddingError(f"{what} needs pad_factor >= {required} (support {needed}, "
                           f"padded extent {u.spec.pad_extent})", required_pad_factor=required)


def monomial(u, q1, q2):
    """u^q1 conj(u)^q2 by exact products."""
    if q1 < 0 or q2 < 0 or q1 + q2 < 1:
        raise ValueError(f"monomial needs q1, q2 >= 0 with q1 + q2 >= 1, got ({q1}, {q2})")
    require_padding(u, q1 + q2, f"u^{q1} conj(u)^{q2}")
    factors = [u] * q1 + [u.conj()] * q2
    result = factors[0]
    for factor in factors[1:]:
        result = multiply(result, factor)
    return result


def modulus_power(u, p):
    """(u conj(u))^p by repeated exact products; p = 0 gives the constant 1."""
    if p == 0:
        return make_field(u.spec, {(0,) * u.spec.d: 1.0}, real_valued=True).resize(0)
    modulus = multiply(u, u.conj())
    result = modulus
    for _ in range(p - 1):
        result = multiply(result, modulus)
    return result


def laplacian():
    """Symbol -|j|^2."""
    def symbol(j):
        return -np.sum(j ** 2, axis=-1)
    return symbol


def jap(m):
    """Symbol <j>^m = (1+|j|^2)^(m/2)."""
    def symbol(j):
        return (1.0 + np.sum(j ** 2, axis=-1)) ** (m / 2.0)
    return symbol


def jjap(s, R):
    """Symbol max{R, |j|}^s."""
    def symbol(j):
        return np.maximum(R, np.sqrt(np.sum(j ** 2, axis=-1))) ** s
    return symbol


def halfwave(s):
    """Symbol |j|^s with 0^s = 0 for s > 0."""
    def symbol(j):
        r = np.sqrt(np.sum(j ** 2, axis=-1))
        if s == 0:
            return np.ones_like(r)
        return np.where(r > 0, r, 0.0) ** s
    return symbol


def apply_multiplier(u, symbol):
    """
    Multiply every coefficient u_hat(j) by symbol(j).

    Args:
        u (FourierField): Field
        symbol (callable): Maps an array of frequency vectors (..., d) to values

    Returns:
        FourierField: Filtered field
    """
    values = np.asarray(symbol(u.frequencies().astype(np.float64)), dtype=np.complex128)
    values = np.broadcast_to(values, u.coeffs.shape)
    if not np.all(np.isfinite(values)):
        raise ValueError("multiplier symbol is not finite on the lattice")
    even_real = bool(np.all(values == np.conj(np.flip(values))))
    return FourierField(u.spec, u.coeffs * values, u.real_valued and even_real)


def project(u, N, side='low'):
    """
    Euclidean frequency projector: low keeps |j| <= N, high keeps the rest.
    """
    if not N > 0:
        raise ValueError(f"projector threshold must be positive, got {N}")
    low = u.sq_norms() <= N * N
    if side == 'low':
        arr = np.where(low, u.coeffs, 0)
    elif side == 'high':
        arr = np.where(low, 0, u.coeffs)
    else:
        raise ValueError(f"side must be 'low' or 'high', got {side!r}")
    return FourierField(u.spec, arr, u.real_valued)


def norm(u, kind='weighted', params=None):
    """
    Norm of a field.

    Args:
        u (FourierField): Field
        kind (str): 'L2', 'Hs_sum' or 'weighted'
        params (NormParams): Required for 'Hs_sum' and 'weighted'

    Returns:
        float: Nonnegative norm value
    """
    power = np.abs(u.coeffs) ** 2
    l2 = math.sqrt(float(np.sum(power)))
    if kind == 'L2':
        return l2
    if params is None:
        raise ValueError(f"norm kind {kind!r} needs NormParams")
    r = np.sqrt(u.sq_norms())
    if kind == 'Hs_sum':
        if params.s == 0:
            return 2.0 * l2
        homogeneous = np.where(r > 0, r, 0.0) ** (2 * params.s)
        return l2 + math.sqrt(float(np.sum(homogeneous * power)))
    if kind == 'weighted':
        weights = np.maximum(params.R, r) ** (2 * params.s)
        return math.sqrt(float(np.sum(weights * power)))
    raise ValueError(f"unknown norm kind {kind!r}")


def weighted_norm(u, s, R):
    return norm(u, 'weighted', NormParams(s, R))


def inner_l2(u, v):
    """Parseval inner product sum_j u_hat(j) conj(v_hat(j))."""
    a, b = u._aligned(v)
    return complex(np.vdot(b, a))


def field_to_json(u):
    """
    Serialize to JSON: spec header plus (j, re, im) triples of nonzero modes.
    """
    modes = []
    for idx in np.argwhere(u.coeffs != 0):
        j = [int(c) - u.extent for c in idx]
        value = u.coeffs[tuple(idx)]
        modes.append([j, float(value.real), float(value.imag)])
    payload = {
        'spec': u.spec.to_dict(),
        'extent': u.extent,
        'real_valued': u.real_valued,
        'modes': modes,
    }
    return json.dumps(payload)


def field_from_json(text):
    payload = json.loads(text)
    spec = LatticeSpec(**payload['spec'])
    e = payload['extent']
    arr = np.zeros((2 * e + 1,) * spec.d, dtype=np.complex128)
    for j, re, im in payload['modes']:
        arr[tuple(c + e for c in j)] = complex(re, im)
    return FourierField(spec, arr, payload['real_valued'])


def save_field(u, path):
    """Write a field as .npz (flat binary) or JSON, chosen by suffix."""
    path = str(path)
    if path.endswith('.npz'):
        np.savez(path, coeffs=u.coeffs, d=u.spec.d, K=u.spec.K,
                 pad_factor=u.spec.pad_factor, real_valued=u.real_valued)
    else:
        with open(path, 'w') as f:
            f.write(field_to_json(u))


def load_field(path):
    path = str(path)
    if path.endswith('.npz'):
        with np.load(path) as data:
            spec = LatticeSpec(int(data['d']), int(data['K']), int(data['pad_factor']))
            return FourierField(spec, data['coeffs'], bool(data['real_valued']))
    with open(path, 'r') as f:
        return field_from_json(f.read())
