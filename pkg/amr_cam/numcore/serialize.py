"""
Formato de volcado de tensores.

Una línea ASCII `TNSR <rank> <d0> <d1> ...` seguida de los valores en
float32 little-endian, orden row-major.
"""

from pathlib import Path
from typing import BinaryIO, Union

import numpy as np

from amr_cam.numcore import DimensionError
from amr_cam.numcore.tensor import Tensor

MAGIC = b"TNSR"
_PAYLOAD_DTYPE = np.dtype("<f4")


def dump_tensor(value: Union[Tensor, np.ndarray], stream: BinaryIO) -> int:
    """Escribe un tensor y devuelve los bytes escritos."""
    data = value.data if isinstance(value, Tensor) else np.asarray(value)
    dims = " ".join(str(d) for d in data.shape)
    header = f"TNSR {data.ndim} {dims}".rstrip() + "\n"
    payload = np.ascontiguousarray(data, dtype=_PAYLOAD_DTYPE).tobytes()
    stream.write(header.encode("ascii"))
    stream.write(payload)
    return len(header) + len(payload)


def load_tensor(stream: BinaryIO) -> Tensor:
    """Lee un tensor escrito por `dump_tensor`."""
    header = stream.readline().decode("ascii").split()
    if not header or header[0] != MAGIC.decode("ascii"):
        raise DimensionError(f"Cabecera de tensor inválida: {header}.")
    rank = int(header[1])
    shape = tuple(int(d) for d in header[2:])
    if len(shape) != rank:
        raise DimensionError(f"Cabecera declara rango {rank} y trae {shape}.")
    count = int(np.prod(shape))
    payload = stream.read(count * _PAYLOAD_DTYPE.itemsize)
    if len(payload) != count * _PAYLOAD_DTYPE.itemsize:
        raise DimensionError("Volcado de tensor truncado.")
    values = np.frombuffer(payload, dtype=_PAYLOAD_DTYPE).reshape(shape)
    return Tensor(values, dtype=np.float32)


def save_tensor(value: Union[Tensor, np.ndarray], path: Path) -> None:
    with open(path, "wb") as stream:
        dump_tensor(value, stream)


def read_tensor(path: Path) -> Tensor:
    with open(path, "rb") as stream:
        return load_tensor(stream)
