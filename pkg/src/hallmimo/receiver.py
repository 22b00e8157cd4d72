"""Linear uplink detection: MMSE / ZF / MRC combiners, SINR, decoding.

All combining is centralized: the M x K channel matrix collects every
antenna element of every AP, and one combining matrix V jointly separates
the K user streams. SINR for user k is

    p |v_k^H g_k|^2 / (p sum_{k' != k} |v_k^H g_k'|^2 + sigma^2 ||v_k||^2),

which is invariant to rescaling v_k.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .channel import ChannelMatrix, DimensionMismatch

ZF_CONDITION_LIMIT = 1e12  # relative condition threshold on the Gram matrix

COMBINER_KINDS = ("mmse", "zf", "mrc")


class RankDeficient(ValueError):
    """The channel Gram matrix is singular at working precision."""


class ZeroCombinerColumn(ValueError):
    """A combiner column is identically zero; its SINR is undefined."""


class NumericalFailure(RuntimeError):
    """A regularized solve failed; should be unreachable in practice."""


@dataclass
class Combiner:
    """Combining matrix V (M x K); column k extracts user k's stream."""

    v: np.ndarray
    kind: str


@dataclass
class SinrReport:
    """Per-user SINR, decode decisions, and the decoded count D."""

    sinr: np.ndarray
    decoded: np.ndarray
    decoded_count: int


def mmse_combiner(g: ChannelMatrix, noise_w: float, tx_power_w: float) -> Combiner:
    """SINR-optimal linear combiner V = (G G^H + (sigma^2/p) I)^-1 G.

    Solved through the equivalent K x K form G (G^H G + (sigma^2/p) I)^-1
    using a Cholesky factorization of the regularized Gram matrix.
    """
    mat = g.g
    k = mat.shape[1]
    gh = mat.conj().T
    gram = gh @ mat
    gram.flat[:: k + 1] += noise_w / tx_power_w  # in-place ridge on the diagonal
    try:
        # inputs are finite by construction; skip scipy's finiteness scan
        cho = scipy.linalg.cho_factor(gram, check_finite=False)
        vh = scipy.linalg.cho_solve(cho, gh, check_finite=False)
    except scipy.linalg.LinAlgError as exc:  # pragma: no cover
        raise NumericalFailure(f"regularized MMSE solve failed: {exc}") from exc
    return Combiner(v=vh.conj().T, kind="mmse")


def zf_combiner(g: ChannelMatrix) -> Combiner:
    """Zero-forcing combiner V = G (G^H G)^-1, so that V^H G = I.

    Computed from the SVD pseudo-inverse; rejects channels whose Gram
    matrix condition number exceeds ZF_CONDITION_LIMIT.
    """
    mat = g.g
    m, k = mat.shape
    if m < k:
        raise RankDeficient(f"zero forcing needs M >= K, got M={m}, K={k}")
    u, s, vh = np.linalg.svd(mat, full_matrices=False)
    if s[-1] <= 0 or (s[0] / s[-1]) ** 2 > ZF_CONDITION_LIMIT:
        raise RankDeficient("channel Gram matrix is singular at working precision")
    pinv = (vh.conj().T * (1.0 / s)) @ u.conj().T  # (K, M) = V^H
    return Combiner(v=pinv.conj().T, kind="zf")


def mrc_combiner(g: ChannelMatrix) -> Combiner:
    """Maximum ratio combining: V = G."""
    return Combiner(v=g.g.copy(), kind="mrc")


def build_combiner(
    kind: str, g: ChannelMatrix, noise_w: float, tx_power_w: float
) -> Combiner:
    if kind == "mmse":
        return mmse_combiner(g, noise_w, tx_power_w)
    if kind == "zf":
        return zf_combiner(g)
    if kind == "mrc":
        return mrc_combiner(g)
    raise ValueError(f"unknown combiner kind {kind!r}")


def sinr_per_user(
    v: Combiner, g: ChannelMatrix, tx_power_w: float, noise_w: float
) -> np.ndarray:
    """Post-combining SINR of every user, as linear ratios."""
    vm, gm = v.v, g.g
    if vm.shape != gm.shape:
        raise DimensionMismatch(f"combiner {vm.shape} vs channel {gm.shape}")
    k = vm.shape[1]
    col_energy = np.einsum("mk,mk->k", vm.conj(), vm).real
    if not col_energy.all():
        raise ZeroCombinerColumn("combiner has an all-zero column")
    cross = np.abs(vm.conj().T @ gm) ** 2  # cross[k, k'] = |v_k^H g_k'|^2
    signal = tx_power_w * cross.flat[:: k + 1].copy()
    cross.flat[:: k + 1] = 0.0  # zero the diagonal: remaining row sum = interference
    interference = tx_power_w * cross.sum(axis=1)
    return signal / (interference + noise_w * col_energy)


def decode(sinrs: np.ndarray, rate_bpshz: float) -> SinrReport:
    """Decode decisions against the rate threshold 2^R - 1 (inclusive)."""
    if rate_bpshz <= 0:
        raise ValueError("rate_bpshz must be positive")
    sinrs = np.asarray(sinrs, dtype=float)
    threshold = 2.0**rate_bpshz - 1.0
    decoded = sinrs >= threshold
    return SinrReport(sinr=sinrs, decoded=decoded, decoded_count=int(decoded.sum()))
