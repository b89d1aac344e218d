"""Per-qubit measurement kernel with a compiled fast path.

The Cython extension is selected at import when available; otherwise the
numpy implementation is used.  Both consume pre-drawn random arrays and are
bit-for-bit interchangeable, so backend choice never affects results.  Set
``BB84SIM_KERNELS=python`` or ``=c`` to force a backend (``c`` raises if the
extension is missing).  ``benchmarks/bench_kernels.py`` compares the two.
"""

import os

import numpy as np

from ..errors import DimensionError
from . import _pykernels

_impl = _pykernels
_backend = "python"

_requested = os.environ.get("BB84SIM_KERNELS", "").strip().lower()
if _requested not in ("", "python", "c"):
    raise RuntimeError(f"BB84SIM_KERNELS must be 'python' or 'c', not {_requested!r}")
if _requested != "python":
    try:
        from . import _ckernels

        _impl = _ckernels
        _backend = "c"
    except ImportError:
        if _requested == "c":
            raise RuntimeError("BB84SIM_KERNELS=c but the compiled kernel is not importable")


def backend() -> str:
    """Name of the active backend: 'c' or 'python'."""
    return _backend


def measure_bits(prep_basis, prep_bit, flip, eve_basis, bob_basis, coin):
    """Measurement outcomes for a batch of transmitted qubits.

    Args:
        prep_basis: uint8 array, preparation basis per position (0=Z, 1=X).
        prep_bit: uint8 array, prepared bit values.
        flip: uint8 array, 1 where the channel flipped the bit in its
            preparation basis.
        eve_basis: int8 array, interceptor's measurement basis per position,
            -1 where the position was not intercepted.
        bob_basis: uint8 array, receiver's measurement basis.
        coin: uint8 array, pre-drawn fair coins used wherever the outcome is
            random (mismatched measurement basis, or interception in the
            wrong basis).

    Returns:
        uint8 array of measured bits, same length as the inputs.
    """
    prep_basis = np.ascontiguousarray(prep_basis, dtype=np.uint8)
    n = prep_basis.shape[0]
    prep_bit = np.ascontiguousarray(prep_bit, dtype=np.uint8)
    flip = np.ascontiguousarray(flip, dtype=np.uint8)
    eve_basis = np.ascontiguousarray(eve_basis, dtype=np.int8)
    bob_basis = np.ascontiguousarray(bob_basis, dtype=np.uint8)
    coin = np.ascontiguousarray(coin, dtype=np.uint8)
    for arr in (prep_bit, flip, eve_basis, bob_basis, coin):
        if arr.shape != (n,):
            raise DimensionError(f"kernel input shape {arr.shape} != ({n},)")
    return _impl.measure_bits(prep_basis, prep_bit, flip, eve_basis, bob_basis, coin)
