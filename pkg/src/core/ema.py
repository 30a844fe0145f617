import math
from dataclasses import dataclass

import torch
import torch.nn as nn


@dataclass
class TauSchedule:
    """EMA decay schedule

    mode 'cosine' ramps from tau_base at step 0 to 1 at total_steps;
    mode 'constant' keeps tau_base throughout.
    """
    tau_base: float = 0.996
    total_steps: int = 1
    mode: str = 'cosine'

    def __post_init__(self):
        if not 0.0 <= self.tau_base <= 1.0:
            raise ValueError(f"Invalid tau_base: {self.tau_base}")
        if self.total_steps < 1:
            raise ValueError(f"Invalid total_steps: {self.total_steps}")
        if self.mode not in ('cosine', 'constant'):
            raise ValueError(f"Unknown tau schedule mode: {self.mode}")

    def tau_for_step(self, step: int) -> float:
        return tau_for_step(self, step)


def tau_for_step(schedule: TauSchedule, step: int) -> float:
    """tau = 1 - (1 - tau_base) * (cos(pi * step / total_steps) + 1) / 2"""
    if not 0 <= step <= schedule.total_steps:
        raise ValueError(f"Step {step} outside [0, {schedule.total_steps}]")
    if schedule.mode == 'constant':
        return schedule.tau_base
    if step == schedule.total_steps:
        return 1.0
    ramp = (math.cos(math.pi * step / schedule.total_steps) + 1.0) / 2.0
    return 1.0 - (1.0 - schedule.tau_base) * ramp


@torch.no_grad()
def ema_update(target: nn.Module, online: nn.Module, tau: float):
    """In place: p' <- tau * p' + (1 - tau) * p for every parameter pair"""
    if not 0.0 <= tau <= 1.0:
        raise ValueError(f"Invalid tau: {tau}")

    target_params = dict(target.named_parameters())
    online_params = dict(online.named_parameters())
    if target_params.keys() != online_params.keys():
        raise ValueError("Target and online modules have different parameter sets")

    for name, p_target in target_params.items():
        p_online = online_params[name]
        if p_target.shape != p_online.shape:
            raise ValueError(f"Shape mismatch for {name}: {tuple(p_target.shape)} vs {tuple(p_online.shape)}")
        if tau == 1.0:
            continue
        p_target.mul_(tau).add_(p_online, alpha=1.0 - tau)
