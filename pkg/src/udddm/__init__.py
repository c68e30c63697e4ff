"""Unified directly-denoising diffusion models at desk scale, with closed-form oracles."""

from udddm.config import RunConfig, load_config
from udddm.estimate_store import EstimateBuffer, init_buffer, memory_footprint
from udddm.estimator import UDDDMGenerator
from udddm.losses import adaptive_loss, adaptive_weights, pseudo_huber
from udddm.network import Network, NetworkConfig
from udddm.sampler import sample
from udddm.schedules import make_schedule, make_ve_geometric, make_ve_karras, make_vp_linear
from udddm.trainer import ScheduleConfig, TrainConfig, train

__version__ = "0.1.0"

__all__ = [
    "EstimateBuffer", "Network", "NetworkConfig", "RunConfig", "ScheduleConfig", "TrainConfig",
    "UDDDMGenerator", "adaptive_loss", "adaptive_weights", "init_buffer", "load_config",
    "make_schedule", "make_ve_geometric", "make_ve_karras", "make_vp_linear", "memory_footprint",
    "pseudo_huber", "sample", "train",
]
