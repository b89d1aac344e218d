"""bb84sim: simulator and analysis toolkit for the two-stage concatenated
BB84 key-distribution protocol, with the classical nested-code machinery for
error correction and privacy amplification."""

from .channel import AttackModel, Basis, QubitRecord, measure, transmit
from .codes import (
    CssPair,
    LinearCode,
    SyndromeTable,
    builtin_pair,
    coset_label,
    decode_to_codeword,
    load_pair,
    make_css_pair,
    make_golay_23_12,
    make_hamming_7_4,
    random_codeword,
)
from .gf2 import BitMatrix, BitVector, add, mat_vec, row_reduce, solve_membership
from .protocol import (
    ProtocolConfig,
    RunOutcome,
    check_and_decide,
    replay_bob,
    run_protocol,
    run_protocol_full,
    sift,
    stage_correct_and_amplify,
)
from .stats import (
    RecursionModel,
    SamplingModel,
    cheat_probability,
    cheat_probability_binomial,
    confidence_threshold,
    iterate_error_rate,
    sigma,
)
from .transcript import Transcript, dump_transcript, parse_transcript

__version__ = "0.1.0"
