"""Fixed-capacity FIFO memory bank of key embeddings."""
import torch


class EmbeddingQueue:
    """Ring buffer of the most recent ``capacity`` keys.

    ``size`` counts stored keys and saturates at ``capacity``; once full,
    each enqueue overwrites the oldest entries.
    """

    def __init__(self, capacity: int, dim: int, dtype: torch.dtype = torch.float32,
                 device: torch.device = torch.device("cpu")):
        if capacity < 1:
            raise ValueError(f"queue capacity must be positive, got {capacity}")
        self.capacity = capacity
        self.dim = dim
        self._buffer = torch.zeros(capacity, dim, dtype=dtype, device=device)
        self._ptr = 0
        self.size = 0

    def __len__(self) -> int:
        return self.size

    @property
    def is_full(self) -> bool:
        return self.size == self.capacity

    @torch.no_grad()
    def enqueue(self, keys: torch.Tensor) -> None:
        keys = keys.detach()
        if keys.dim() != 2 or keys.shape[1] != self.dim:
            raise ValueError(f"keys must be n x {self.dim}, got {tuple(keys.shape)}")
        if keys.shape[0] > self.capacity:
            keys = keys[-self.capacity:]
        n = keys.shape[0]
        end = self._ptr + n
        if end <= self.capacity:
            self._buffer[self._ptr:end] = keys
        else:
            split = self.capacity - self._ptr
            self._buffer[self._ptr:] = keys[:split]
            self._buffer[:n - split] = keys[split:]
        self._ptr = end % self.capacity
        self.size = min(self.capacity, self.size + n)

    def contents(self) -> torch.Tensor:
        """Stored keys, oldest first."""
        if self.size < self.capacity:
            return self._buffer[:self.size].clone()
        return torch.cat([self._buffer[self._ptr:], self._buffer[:self._ptr]]).clone()
