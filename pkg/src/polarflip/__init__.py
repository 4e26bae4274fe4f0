"""List-flip decoding of CRC/PC-concatenated polar codes."""

from .channel import ChannelConfig, add_noise, frame_rng, llr, modulate, noiseless_llr
from .construction import (
    Allocation,
    CodeSpec,
    PcBit,
    allocate_pc_bits,
    build_code_spec,
    build_critical_set,
    build_reliability_order,
    ga_means,
    segment_plan,
)
from .controllers import DecoderConfig, DecoderKind, FlipList, FrameResult, decode_frame, update_flip_list
from .encoder import assemble_u, bit_reversal, compute_crc, encode, polar_transform
from .metrics import FlipSet, MetricKind, MetricParams, e_metric, f_beta, f_star, m_metric
from .scl import DecodeOutcome, Status, count_cnp, crc_check, pc_check, pm_update, scl_decode
from .sim import SimRecord, SweepConfig, load_config, parse_config, run_sweep, write_csv

__version__ = "0.1.0"
