"""Audio-level orchestration shared by the CLI, benchmark, and tests."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence

import numpy as np

from . import pipeline
from .metrics import align_permutation, si_sdr
from .stft import StftPlan, istft, stft
from .types import GgdConfig


def plan_from_ms(win_ms: float, hop_ms: float, sample_rate: int) -> StftPlan:
    """Build a Hamming analysis plan from window/hop durations."""
    frame_len = int(round(win_ms * 1e-3 * sample_rate))
    hop_len = int(round(hop_ms * 1e-3 * sample_rate))
    return StftPlan.hamming(frame_len, hop_len)


def separate_audio(
    samples: np.ndarray,
    sample_rate: int,
    cfg: GgdConfig,
    win_ms: float = 128.0,
    hop_ms: float = 64.0,
    reference_channel: int = 0,
    on_record: Optional[Callable] = None,
) -> tuple[np.ndarray, "pipeline.RunResult"]:
    """Separate a multichannel waveform end to end.

    Returns ``(estimates, result)`` where estimates are time-domain
    sources shaped ``(n_samples, N)``.
    """
    plan = plan_from_ms(win_ms, hop_ms, sample_rate)
    x = stft(samples, plan, sample_rate)
    result = pipeline.run(x, cfg, reference_channel=reference_channel, on_record=on_record)
    estimates = istft(result.sources, plan, length=np.asarray(samples).shape[0])
    return estimates, result


@dataclass(frozen=True)
class EvaluationRow:
    """Scores for one aligned source."""

    source: int
    estimate_index: int
    sdr_db: float
    sdr_improvement_db: float


def evaluate_separation(
    estimates: Sequence[np.ndarray],
    references: Sequence[np.ndarray],
    mixture_at_ref_channel: np.ndarray,
) -> List[EvaluationRow]:
    """Align estimates to references and score each source."""
    alignment = align_permutation(estimates, references)
    rows = []
    for n, ref in enumerate(references):
        baseline = si_sdr(mixture_at_ref_channel, ref)
        rows.append(
            EvaluationRow(
                source=n + 1,
                estimate_index=alignment.permutation[n],
                sdr_db=alignment.sdr_db[n],
                sdr_improvement_db=alignment.sdr_db[n] - baseline,
            )
        )
    return rows
