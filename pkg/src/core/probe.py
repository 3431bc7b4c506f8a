"""Probe geometry and the desk-scale standard probes."""

from typing import List, Literal, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from ..util.errors import InvalidInputError

ProbeKind = Literal["dense16", "medium16", "sparse16"]

# Electrode pitch of the desk-scale analogs of NP-Ultra, NP-2.0 and NP-1.0.
STANDARD_PITCH_UM = {
    "dense16": 6.0,
    "medium16": 15.0,
    "sparse16": 20.0,
}
STANDARD_CHANNELS = 16


class ProbeGeometry(BaseModel):
    """Electrode positions of a probe, in micrometers."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    channel_positions: List[Tuple[float, float, float]]
    pitch_um: float = Field(..., gt=0)
    name: str = ""

    @field_validator('channel_positions')
    @classmethod
    def positions_valid(cls, v):
        if len(v) < 1:
            raise ValueError('Probe must have at least one channel')
        if len(set(v)) != len(v):
            raise ValueError('Channel positions must be pairwise distinct')
        for position in v:
            if not all(np.isfinite(position)):
                raise ValueError(f'Channel position is not finite: {position}')
        return v

    @property
    def n_channels(self) -> int:
        return len(self.channel_positions)

    def positions_array(self) -> np.ndarray:
        """Return positions as a (channels, 3) float64 array."""
        return np.asarray(self.channel_positions, dtype=np.float64)

    def hull(self) -> Tuple[np.ndarray, np.ndarray]:
        """Return the axis-aligned bounding box (low, high) of the electrodes."""
        positions = self.positions_array()
        return positions.min(axis=0), positions.max(axis=0)


def standard_probe(kind: ProbeKind) -> ProbeGeometry:
    """Build a 16-channel, 2-column probe with the pitch of ``kind``."""
    if kind not in STANDARD_PITCH_UM:
        raise InvalidInputError(f"Unknown probe kind: {kind}")
    pitch = STANDARD_PITCH_UM[kind]
    positions = []
    for channel in range(STANDARD_CHANNELS):
        column = channel % 2
        row = channel // 2
        positions.append((column * pitch, 0.0, row * pitch))
    return ProbeGeometry(channel_positions=positions, pitch_um=pitch, name=kind)
