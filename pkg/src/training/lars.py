"""
LARS (SGD with layer-wise trust ratio) and parameter grouping for pre-training

Update per parameter p with gradient g:
    d = g + wd * p
    trust = eta * ||p|| / (||d|| + eps)      (1 when ||p|| or ||g|| is 0)
    buf = momentum * buf + trust * d          (buf starts at 0)
    p = p - lr * buf

Groups with lars_adapt=False skip the trust ratio (trust = 1).
"""

import math
from typing import Dict, Iterable, List, Tuple

import torch
from torch.optim.optimizer import Optimizer


class LARS(Optimizer):
    def __init__(self, params, lr: float = 1.0, momentum: float = 0.9, weight_decay: float = 0.0,
                 trust_coefficient: float = 1.0, eps: float = 1e-9, lars_adapt: bool = True):
        if lr < 0.0:
            raise ValueError(f"Invalid learning rate: {lr}")
        if not 0.0 <= momentum < 1.0:
            raise ValueError(f"Invalid momentum value: {momentum}")
        if weight_decay < 0.0:
            raise ValueError(f"Invalid weight_decay value: {weight_decay}")
        if trust_coefficient <= 0.0:
            raise ValueError(f"Invalid trust coefficient: {trust_coefficient}")

        defaults = dict(lr=lr, momentum=momentum, weight_decay=weight_decay,
                        trust_coefficient=trust_coefficient, eps=eps, lars_adapt=lars_adapt)
        super().__init__(params, defaults)

    @torch.no_grad()
    def step(self, closure=None):
        loss = None
        if closure is not None:
            with torch.enable_grad():
                loss = closure()

        for group in self.param_groups:
            weight_decay = group['weight_decay']
            momentum = group['momentum']

            for p in group['params']:
                if p.grad is None:
                    continue
                grad = p.grad
                if not torch.isfinite(grad).all():
                    raise ValueError("Non-finite gradient in LARS step")

                update = grad.add(p, alpha=weight_decay) if weight_decay != 0 else grad.clone()

                state = self.state[p]
                trust_ratio = torch.ones((), dtype=p.dtype, device=p.device)
                if group['lars_adapt']:
                    w_norm = p.norm(2.0)
                    g_norm = grad.norm(2.0)
                    ratio = group['trust_coefficient'] * w_norm / (update.norm(2.0) + group['eps'])
                    trust_ratio = torch.where(w_norm > 0, torch.where(g_norm > 0, ratio, trust_ratio),
                                              trust_ratio)
                    update.mul_(trust_ratio)
                state['trust_ratio'] = float(trust_ratio)

                if 'momentum_buffer' not in state:
                    state['momentum_buffer'] = torch.zeros_like(p)
                buf = state['momentum_buffer']
                buf.mul_(momentum).add_(update)

                p.add_(buf, alpha=-group['lr'])

        return loss


def exclude_from_adaptation(name: str, param: torch.Tensor) -> bool:
    """Biases and normalization parameters (ndim <= 1) get no decay and no trust scaling"""
    return param.ndim <= 1


def split_param_groups(named_params: Iterable[Tuple[str, torch.nn.Parameter]],
                       weight_decay: float) -> List[Dict]:
    regular, excluded = [], []
    for name, param in named_params:
        (excluded if exclude_from_adaptation(name, param) else regular).append(param)
    groups = [{'params': regular, 'weight_decay': weight_decay, 'lars_adapt': True}]
    if excluded:
        groups.append({'params': excluded, 'weight_decay': 0.0, 'lars_adapt': False})
    return groups


def build_optimizer(named_params: Iterable[Tuple[str, torch.nn.Parameter]], name: str,
                    learning_rate: float, weight_decay: float,
                    trust_coefficient: float = 1.0, momentum: float = 0.9) -> Optimizer:
    """'lars' or 'momentum_sgd' over the same exclusion groups"""
    groups = split_param_groups(named_params, weight_decay)
    if name == 'lars':
        return LARS(groups, lr=learning_rate, momentum=momentum,
                    trust_coefficient=trust_coefficient)
    if name == 'momentum_sgd':
        for group in groups:
            group.pop('lars_adapt')
        return torch.optim.SGD(groups, lr=learning_rate, momentum=momentum)
    raise ValueError(f"Unknown optimizer: {name}")


def learning_rate_at(base_lr: float, step: int, total_steps: int, warmup_steps: int = 0,
                     schedule: str = 'cosine') -> float:
    """Linear warm-up then cosine decay to 0; a pure function of the step"""
    if schedule == 'constant':
        return base_lr
    if schedule != 'cosine':
        raise ValueError(f"Unknown learning rate schedule: {schedule}")
    if warmup_steps > 0 and step < warmup_steps:
        return base_lr * (step + 1) / warmup_steps
    decay_steps = max(total_steps - warmup_steps, 1)
    progress = min(max(step - warmup_steps, 0) / decay_steps, 1.0)
    return base_lr * 0.5 * (1.0 + math.cos(math.pi * progress))
