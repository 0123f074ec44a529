"""
Paralinearization of the power nonlinearity |u|^{2p}u.
Provides the symbols a = (p+1)|u|^{2p}, b = p|u|^{2(p-1)}u^2 and c = b/2,
the exact para-product split of the nonlinearity, and the time derivative of c
along the NLS flow.
"""

import logging
from typing import NamedTuple

from fourier_core import (
    FourierField, apply_multiplier, laplacian, modulus_power, monomial, multiply,
    power_nonlinearity, require_padding
)
from paradiff import CutoffSpec, paraproduct

logger = logging.getLogger(__name__)


class ParalinParts(NamedTuple):
    """
    Pieces of |u|^{2p}u = T_a u + T_b conj(u) + remainder.

    The remainder is stored combined, defined by difference, so the three
    fields reassemble the nonlinearity exactly.
    """

    sym_a: FourierField
    sym_b: FourierField
    para_u: FourierField
    para_ubar: FourierField
    remainder: FourierField

    def reassemble(self):
        return self.para_u + self.para_ubar + self.remainder


def _check_power(p):
    if int(p) != p or p < 1:
        raise ValueError(f"power p must be a positive integer, got {p}")


def symbol_a(u, p):
    """(p+1)|u|^{2p}."""
    _check_power(p)
    return (p + 1) * modulus_power(u, p)


def symbol_b(u, p):
    """p|u|^{2(p-1)}u^2."""
    _check_power(p)
    return p * monomial(u, p + 1, p - 1)


def paralinearize_power(u, p, cutoff=None, method='auto'):
    """
    Split |u|^{2p}u into para-products and a smoothing remainder.

    Args:
        u (FourierField): State
        p (int): Power
        cutoff (CutoffSpec): Para-product cutoff, default CutoffSpec()
        method (str): Kernel evaluation path passed to paradiff

    Returns:
        ParalinParts: Symbols, the two para-products and the remainder
    """
    _check_power(p)
    require_padding(u, 2 * p + 1, "paralinearization")
    cutoff = cutoff or CutoffSpec()

    sym_a = symbol_a(u, p)
    sym_b = symbol_b(u, p)
    para_u = paraproduct(sym_a, u, cutoff, method)
    para_ubar = paraproduct(sym_b, u.conj(), cutoff, method)
    full = power_nonlinearity(u, p, 1)
    remainder = full - para_u - para_ubar

    logger.debug("paralinearized p=%d on extent %d", p, u.extent)
    return ParalinParts(sym_a, sym_b, para_u, para_ubar, remainder)


def symbol_c(u, p):
    """c = b/2 = (p/2)|u|^{2(p-1)}u^2."""
    return 0.5 * symbol_b(u, p)


def time_derivative(u, p, sign=1):
    """
    Right-hand side -i Lap u + i sign |u|^{2p}u of the NLS, with exact products.
    """
    linear = -1j * apply_multiplier(u, laplacian())
    return linear + 1j * power_nonlinearity(u, p, sign)


def dt_symbol_c(u, p, sign=1):
    """
    Time derivative of c along the flow, by the chain rule on c = (p/2)u^{p+1}conj(u)^{p-1}.

    Args:
        u (FourierField): State
        p (int): Power
        sign (int): +1 or -1, the sign of the nonlinearity

    Returns:
        FourierField: d/dt c(u) on extent 4p*u.extent
    """
    _check_power(p)
    require_padding(u, 4 * p, "time derivative of c")
    ut = time_derivative(u, p, sign)

    total = (p + 1) * multiply(monomial(u, p, p - 1), ut)
    if p >= 2:
        total = total + (p - 1) * multiply(monomial(u, p + 1, p - 2), ut.conj())
    return 0.5 * p * total
