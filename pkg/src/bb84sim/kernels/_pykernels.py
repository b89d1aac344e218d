"""Pure-numpy measurement kernel; fallback when the extension is not built."""

import numpy as np


def measure_bits(prep_basis, prep_bit, flip, eve_basis, bob_basis, coin):
    # A record whose interceptor measured in the wrong basis is re-randomized,
    # whatever Bob does; otherwise a matched-basis measurement is the prepared
    # bit plus any in-channel flip, and a mismatched one is a fair coin.
    scrambled = (eve_basis >= 0) & (eve_basis != prep_basis)
    deterministic = ~scrambled & (bob_basis == prep_basis)
    return np.where(deterministic, prep_bit ^ flip, coin).astype(np.uint8)
