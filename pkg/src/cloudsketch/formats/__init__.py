"""File interchange: PLY clouds, OBJ meshes, trajectories, session scripts."""
from .obj import read_obj
from .ply import read_ply, write_ply
from .script import read_script, write_script
from .trajectory import TrajectorySample, read_trajectory, write_trajectory

__all__ = [
    "read_ply",
    "write_ply",
    "read_obj",
    "TrajectorySample",
    "read_trajectory",
    "write_trajectory",
    "read_script",
    "write_script",
]
