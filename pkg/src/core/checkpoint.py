"""
Checkpoint directories

<dir>/header.json   shapes, dims, step, phase, config hash, optimizer scalars
<dir>/<path>.bin    one raw little-endian float32 array per tensor, named by
                    its stable parameter path (state_dict key)
"""

import json
import logging
from pathlib import Path
from typing import Dict, Any, Tuple, Union

import numpy as np
import torch
import torch.nn as nn

from ..utils.exceptions import MissingArtifactError

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
HEADER_NAME = 'header.json'
OPTIMIZER_PREFIX = 'optimizer'


def save_checkpoint(directory: Union[str, Path], tensors: Dict[str, torch.Tensor],
                    header: Dict[str, Any]) -> Path:
    """Write tensors and header; returns the checkpoint directory"""
    ckpt_dir = Path(directory)
    ckpt_dir.mkdir(parents=True, exist_ok=True)

    index = {}
    for name, tensor in tensors.items():
        array = tensor.detach().cpu().contiguous().numpy().astype('<f4', copy=False)
        file_name = f"{name}.bin"
        array.tofile(ckpt_dir / file_name)
        index[name] = {'shape': list(array.shape), 'file': file_name}

    full_header = dict(header)
    full_header['format_version'] = FORMAT_VERSION
    full_header['tensors'] = index
    with open(ckpt_dir / HEADER_NAME, 'w', encoding='utf-8') as f:
        json.dump(full_header, f, indent=2, sort_keys=True)

    logger.debug(f"Saved checkpoint with {len(index)} tensors to {ckpt_dir}")
    return ckpt_dir


def load_checkpoint(directory: Union[str, Path]) -> Tuple[Dict[str, torch.Tensor], Dict[str, Any]]:
    """Read a checkpoint back; tensors are float32 and bit-identical to what was saved"""
    ckpt_dir = Path(directory)
    header_path = ckpt_dir / HEADER_NAME
    if not header_path.is_file():
        raise MissingArtifactError(f"Checkpoint header not found: {header_path}")

    with open(header_path, 'r', encoding='utf-8') as f:
        header = json.load(f)

    tensors = {}
    for name, meta in header['tensors'].items():
        path = ckpt_dir / meta['file']
        if not path.is_file():
            raise MissingArtifactError(f"Checkpoint tensor file not found: {path}")
        array = np.fromfile(path, dtype='<f4').reshape(meta['shape'])
        tensors[name] = torch.from_numpy(array.astype(np.float32))

    return tensors, header


def module_tensors(module: nn.Module, prefix: str = '') -> Dict[str, torch.Tensor]:
    """state_dict keyed by stable parameter path"""
    return {f"{prefix}{name}": tensor for name, tensor in module.state_dict().items()}


def load_module_tensors(module: nn.Module, tensors: Dict[str, torch.Tensor], prefix: str = ''):
    state = {name[len(prefix):]: t for name, t in tensors.items() if name.startswith(prefix)}
    module.load_state_dict(state, strict=True)


def optimizer_state(optimizer: torch.optim.Optimizer,
                    param_names: Dict[int, str]) -> Tuple[Dict[str, torch.Tensor], Dict[str, Any]]:
    """Split optimizer state into array tensors and JSON scalars

    param_names maps id(param) to its stable path.
    """
    tensors = {}
    scalars = {}
    for group in optimizer.param_groups:
        for param in group['params']:
            state = optimizer.state.get(param)
            if not state:
                continue
            name = param_names[id(param)]
            for key, value in state.items():
                if value is None:
                    continue
                if torch.is_tensor(value) and value.ndim > 0:
                    tensors[f"{OPTIMIZER_PREFIX}.{name}.{key}"] = value
                else:
                    scalars[f"{name}.{key}"] = {
                        'value': float(value),
                        'tensor': bool(torch.is_tensor(value)),
                    }
    return tensors, scalars


def restore_optimizer_state(optimizer: torch.optim.Optimizer, param_names: Dict[int, str],
                            tensors: Dict[str, torch.Tensor], scalars: Dict[str, Any]):
    """Inverse of optimizer_state"""
    for group in optimizer.param_groups:
        for param in group['params']:
            name = param_names[id(param)]
            state = {}
            tensor_prefix = f"{OPTIMIZER_PREFIX}.{name}."
            for key, tensor in tensors.items():
                if key.startswith(tensor_prefix):
                    state[key[len(tensor_prefix):]] = tensor.clone().to(param.dtype)
            scalar_prefix = f"{name}."
            for key, meta in scalars.items():
                if key.startswith(scalar_prefix):
                    value = meta['value']
                    state[key[len(scalar_prefix):]] = (
                        torch.tensor(value, dtype=torch.float32) if meta['tensor'] else value
                    )
            if state:
                optimizer.state[param] = state


def write_pointer(path: Union[str, Path], payload: Dict[str, Any]):
    """Small JSON pointer file such as best.json"""
    pointer = Path(path)
    pointer.parent.mkdir(parents=True, exist_ok=True)
    with open(pointer, 'w', encoding='utf-8') as f:
        json.dump(payload, f, indent=2, sort_keys=True)


def read_pointer(path: Union[str, Path]) -> Dict[str, Any]:
    pointer = Path(path)
    if not pointer.is_file():
        raise MissingArtifactError(f"Pointer file not found: {pointer}")
    with open(pointer, 'r', encoding='utf-8') as f:
        return json.load(f)
