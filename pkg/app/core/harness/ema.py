"""Exponential moving average of online weights into a target network."""
import torch


@torch.no_grad()
def momentum_update(online: torch.nn.Module, target: torch.nn.Module, momentum: float) -> torch.nn.Module:
    """target <- momentum * target + (1 - momentum) * online, element-wise.

    Buffers (batch-norm statistics) are copied from the online network.
    """
    if not 0.0 <= momentum < 1.0:
        raise ValueError(f"momentum must lie in [0, 1), got {momentum}")
    online_params = list(online.parameters())
    target_params = list(target.parameters())
    if len(online_params) != len(target_params):
        raise ValueError(f"online has {len(online_params)} parameter tensors, target has {len(target_params)}")
    for p_online, p_target in zip(online_params, target_params):
        if p_online.shape != p_target.shape:
            raise ValueError(f"parameter shapes differ: {tuple(p_online.shape)} vs {tuple(p_target.shape)}")
    for p_online, p_target in zip(online_params, target_params):
        p_target.mul_(momentum).add_(p_online.detach(), alpha=1.0 - momentum)
    for b_online, b_target in zip(online.buffers(), target.buffers()):
        b_target.copy_(b_online)
    return target


def init_target(online: torch.nn.Module, target: torch.nn.Module) -> torch.nn.Module:
    """Copy online weights into the target and stop its gradients."""
    target.load_state_dict(online.state_dict())
    for p in target.parameters():
        p.requires_grad_(False)
    return target
