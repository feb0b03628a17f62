"""Detector-side quantities: power difference, SNR contrast, BER, outage."""

from dataclasses import dataclass, replace

import numpy as np
from scipy.special import erfc, erfcinv

from scripts import config


def to_db(x):
    """10 log10(x); zero maps to -inf. Scalars in, floats out."""
    values = np.asarray(x, dtype=float)
    if np.any(values < 0):
        raise ValueError("Cannot express a negative power ratio in dB")

    with np.errstate(divide="ignore"):
        db = 10 * np.log10(values)

    return float(db) if db.ndim == 0 else db


def from_db(x):
    linear = 10 ** (np.asarray(x, dtype=float) / 10)
    return float(linear) if linear.ndim == 0 else linear


@dataclass(frozen=True)
class LinkBudget:
    """Noise power, transmit SNR and the scalar turning solver power into SNR.

    The solver always drives the source with 1 V. ``calibration`` rescales
    its powers so that the source delivers ``snr_tx_db`` above the noise.
    """

    p_noise_w: float = config.P_NOISE_W
    snr_tx_db: float = 0.0
    calibration: float = 1.0

    def __post_init__(self):
        if not self.p_noise_w > 0:
            raise ValueError(f"Noise power must be positive, got {self.p_noise_w}")
        if not np.isfinite(self.calibration) or self.calibration < 0:
            raise ValueError(f"Invalid calibration {self.calibration}")

    @classmethod
    def from_reference(
        cls, snr_tx_db: float, p_source_w: float, p_noise_w: float = config.P_NOISE_W
    ) -> "LinkBudget":
        """Calibrate against the power the 1 V source delivers in a reference solve.

        Args:
            snr_tx_db (float): Requested source power over noise power (dB).
            p_source_w (float): Source power of the reference solve (W).
            p_noise_w (float): Receiver noise power (W).

        Returns:
            LinkBudget: budget whose calibration maps solver watts to watts at
            the requested transmit SNR.

        """
        if not p_source_w > 0:
            raise ValueError(f"Reference source power must be positive, got {p_source_w}")

        return cls(
            p_noise_w=p_noise_w,
            snr_tx_db=snr_tx_db,
            calibration=from_db(snr_tx_db) * p_noise_w / p_source_w,
        )

    def rescaled(self, snr_tx_db: float) -> "LinkBudget":
        return replace(
            self,
            snr_tx_db=snr_tx_db,
            calibration=self.calibration * from_db(snr_tx_db - self.snr_tx_db),
        )


@dataclass(frozen=True)
class DetectionThreshold:
    delta_snr_target_db: float = config.DELTA_SNR_TARGET_DB
    ber_target: float = config.BER_TARGET

    def __post_init__(self):
        if not 0 < self.ber_target < 0.5:
            raise ValueError(f"BER target must lie in (0, 0.5), got {self.ber_target}")

    @property
    def delta_snr_target(self) -> float:
        return from_db(self.delta_snr_target_db)


def delta_power(p_on, p_off):
    """|P_on - P_off|, elementwise for arrays."""
    p_on = np.asarray(p_on, dtype=float)
    p_off = np.asarray(p_off, dtype=float)
    if np.any(p_on < 0) or np.any(p_off < 0):
        raise ValueError("Received powers must be non-negative")

    diff = np.abs(p_on - p_off)
    return float(diff) if diff.ndim == 0 else diff


def delta_snr(delta_p, budget: LinkBudget):
    """Linear SNR contrast of a power difference under ``budget``."""
    delta_p = np.asarray(delta_p, dtype=float)
    if np.any(delta_p < 0):
        raise ValueError("Power difference must be non-negative")

    ds = delta_p * budget.calibration / budget.p_noise_w
    return float(ds) if ds.ndim == 0 else ds


def ber_from_delta_snr(ds):
    """Energy-detector bit error rate 0.5 erfc(ds) for a linear contrast ds."""
    ds = np.asarray(ds, dtype=float)
    if np.any(ds < 0):
        raise ValueError("SNR contrast must be non-negative")

    ber = 0.5 * erfc(ds)
    return float(ber) if ber.ndim == 0 else ber


def delta_snr_target_from_ber(ber_target: float = config.BER_TARGET) -> float:
    """Linear contrast at which ber_from_delta_snr reaches ``ber_target``."""
    if not 0 < ber_target <= 0.5:
        raise ValueError(f"BER target must lie in (0, 0.5], got {ber_target}")

    return float(erfcinv(2 * ber_target))


def snr_captured(p_off_samples, budget: LinkBudget) -> float:
    """Mean reader SNR with the tag transparent, in dB."""
    samples = np.sort(np.asarray(p_off_samples, dtype=float).ravel())
    if samples.size == 0:
        raise ValueError("No OFF-state samples to average")

    return to_db(np.mean(samples) * budget.calibration / budget.p_noise_w)


def outage_probability(delta_snr_values_db, threshold: DetectionThreshold) -> float:
    """Fraction of the values strictly below the target contrast."""
    values = np.asarray(delta_snr_values_db, dtype=float).ravel()
    if values.size == 0:
        raise ValueError("No contrast values to threshold")

    return float(np.mean(values < threshold.delta_snr_target_db))
