"""Device trajectory logs: one `t tx ty tz qw qx qy qz` record per line."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InvalidRotation, NonMonotonicTime, ParseError
from ..geometry import Pose

# a quaternion this far off unit length is renormalized; further off is an error
QUAT_NORM_SLACK = 1e-3


@dataclass(frozen=True)
class TrajectorySample:
    timestamp: float
    pose: Pose


def read_trajectory(path) -> list:
    """Load trajectory samples; timestamps must strictly increase.

    Quaternions within QUAT_NORM_SLACK of unit norm are renormalized;
    anything further off raises InvalidRotation.
    """
    samples = []
    last_t = None
    with open(path, "r", encoding="ascii", errors="replace") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            if len(parts) != 8:
                raise ParseError(
                    "expected 8 fields (t tx ty tz qw qx qy qz), got %d" % len(parts),
                    path=path, line=lineno,
                )
            try:
                values = [float(tok) for tok in parts]
            except ValueError:
                raise ParseError("bad numeric field", path=path, line=lineno)
            t = values[0]
            if last_t is not None and t <= last_t:
                raise NonMonotonicTime(
                    "timestamp %r does not increase" % t, path=path, line=lineno
                )
            last_t = t
            quat = np.array(values[4:8])
            norm = np.linalg.norm(quat)
            if abs(norm - 1.0) > QUAT_NORM_SLACK:
                raise InvalidRotation(
                    "%s:%d: quaternion norm %.6f too far from 1" % (path, lineno, norm)
                )
            pose = Pose.from_quat(quat / norm, np.array(values[1:4]))
            samples.append(TrajectorySample(t, pose))
    return samples


def write_trajectory(samples, path) -> None:
    """Write samples in the same line format read_trajectory accepts."""
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        for sample in samples:
            q = sample.pose.quaternion
            tx, ty, tz = sample.pose.translation
            fh.write(
                "%s %s %s %s %s %s %s %s\n"
                % tuple(repr(float(v)) for v in (sample.timestamp, tx, ty, tz, *q))
            )
