"""Desk-scale digital twin of a UAV search for a hidden RF transmitter."""

from .geodesy import EnuPoint, GeoPoint, GeoRect
from .harness import EpisodeConfig, FlightLog, ScoreReport, replay, run_benchmark, run_episode

__version__ = "0.1.0"

__all__ = ["EnuPoint", "GeoPoint", "GeoRect", "EpisodeConfig", "FlightLog", "ScoreReport",
           "replay", "run_benchmark", "run_episode", "__version__"]
