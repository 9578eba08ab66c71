"""Three-layer memristor networks that learn input-output maps by punishing mistakes.

Modules
-------
device
    Threshold memristor models (BMS and BCM) and their Euler update.
network
    Two-layer device tables, perturbation, shuffling and persistence.
solver
    Nodal analysis with floating idle terminals.
trainer
    Read, punish and the training loop.
toy
    Extremal-dynamics toy network.
experiments
    Sweeps and scenario runners.
output
    CSV and SVG emission.
"""
from .device import BCM, BMS, BcmParams, BmsParams, DeviceRecord
from .network import NetworkDims, NetworkState, build_network
from .trainer import TargetMap, TrainerConfig, train_until_learned

__all__ = [
    "BCM",
    "BMS",
    "BcmParams",
    "BmsParams",
    "DeviceRecord",
    "NetworkDims",
    "NetworkState",
    "TargetMap",
    "TrainerConfig",
    "build_network",
    "train_until_learned",
]
__version__ = "0.1.0"
