"""Exact cosine top-k index over unit-norm chunk embeddings.

Brute-force scan, double precision, deterministic ordering: ties on score
break by ascending chunk_id so runs are reproducible across platforms.
"""
from __future__ import annotations

import io
import json
import struct
from dataclasses import dataclass

import numpy as np

from .chunking import ChunkKind, Provenance
from .embedding import DimensionMismatch, is_unit

MAGIC = b"TVIX"
VERSION = 1


class IndexError_(Exception):
    pass


class DuplicateChunkId(IndexError_):
    pass


class EmptyIndex(IndexError_):
    pass


class CorruptIndexFile(IndexError_):
    pass


@dataclass(frozen=True)
class SearchHit:
    chunk_id: str
    score: float
    rank: int


class VectorIndex:
    """Append-only store of (chunk_id, vector, provenance) with exact top-k."""

    def __init__(self, dim: int):
        if dim < 1:
            raise ValueError(f"dim must be positive, got {dim}")
        self.dim = dim
        self._ids: list[str] = []
        self._vectors: list[np.ndarray] = []
        self._id_set: set[str] = set()
        self.provenance_map: dict[str, Provenance] = {}
        self._matrix: np.ndarray | None = None
        self._ids_arr: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self._ids)

    @property
    def chunk_ids(self) -> list[str]:
        return list(self._ids)

    def add(self, chunk_id: str, vector: np.ndarray, provenance: Provenance) -> None:
        v = np.asarray(vector, dtype=np.float64)
        if v.shape != (self.dim,):
            raise DimensionMismatch(self.dim, int(v.shape[0]) if v.ndim == 1 else -1)
        if chunk_id in self._id_set:
            raise DuplicateChunkId(f"chunk_id {chunk_id!r} already present")
        if not is_unit(v):
            raise ValueError(f"vector for {chunk_id!r} is not unit-norm")
        self._ids.append(chunk_id)
        self._vectors.append(v)
        self._id_set.add(chunk_id)
        self.provenance_map[chunk_id] = provenance
        self._matrix = None
        self._ids_arr = None

    def _sealed(self) -> tuple[np.ndarray, np.ndarray]:
        if self._matrix is None:
            self._matrix = np.vstack(self._vectors)
            self._ids_arr = np.asarray(self._ids)
        return self._matrix, self._ids_arr  # type: ignore[return-value]

    def topk(self, query: np.ndarray, k: int) -> list[SearchHit]:
        """Return min(k, size) hits by descending dot product.

        Scores equal cosine similarity because both sides are unit-norm.
        """
        if k < 1:
            raise ValueError(f"k must be >= 1, got {k}")
        if len(self._ids) == 0:
            raise EmptyIndex("cannot search an empty index")
        q = np.asarray(query, dtype=np.float64)
        if q.shape != (self.dim,):
            raise DimensionMismatch(self.dim, int(q.shape[0]) if q.ndim == 1 else -1)
        if not is_unit(q):
            raise ValueError("query vector is not unit-norm")

        matrix, ids_arr = self._sealed()
        scores = matrix @ q
        # lexsort: last key is primary; ascending -scores == descending scores,
        # ascending chunk_id breaks exact-tie groups.
        order = np.lexsort((ids_arr, -scores))
        top = order[: min(k, len(order))]
        return [
            SearchHit(chunk_id=str(ids_arr[i]), score=float(scores[i]), rank=rank)
            for rank, i in enumerate(top, start=1)
        ]

    # --- persistence ------------------------------------------------------

    def save(self) -> bytes:
        matrix, _ = self._sealed() if self._vectors else (np.zeros((0, self.dim)), None)
        prov = {
            "chunk_ids": self._ids,
            "provenance": [
                {
                    "doc_id": p.doc_id,
                    "table_id": p.table_id,
                    "row_index": p.row_index,
                    "kind": p.kind.value,
                }
                for p in (self.provenance_map[cid] for cid in self._ids)
            ],
        }
        prov_bytes = json.dumps(prov, ensure_ascii=False).encode("utf-8")
        buf = io.BytesIO()
        buf.write(MAGIC)
        buf.write(struct.pack("<IIQ", VERSION, self.dim, len(self._ids)))
        buf.write(np.ascontiguousarray(matrix, dtype="<f8").tobytes())
        buf.write(struct.pack("<Q", len(prov_bytes)))
        buf.write(prov_bytes)
        return buf.getvalue()

    @classmethod
    def load(cls, data: bytes) -> "VectorIndex":
        buf = io.BytesIO(data)
        magic = buf.read(4)
        if magic != MAGIC:
            raise CorruptIndexFile(f"bad magic {magic!r} at offset 0")
        head = buf.read(16)
        if len(head) != 16:
            raise CorruptIndexFile("truncated header")
        version, dim, count = struct.unpack("<IIQ", head)
        if version != VERSION:
            raise CorruptIndexFile(f"unsupported version {version}, expected {VERSION}")
        vec_bytes = buf.read(count * dim * 8)
        if len(vec_bytes) != count * dim * 8:
            raise CorruptIndexFile("truncated vector section")
        len_raw = buf.read(8)
        if len(len_raw) != 8:
            raise CorruptIndexFile("truncated provenance length")
        (prov_len,) = struct.unpack("<Q", len_raw)
        prov_bytes = buf.read(prov_len)
        if len(prov_bytes) != prov_len:
            raise CorruptIndexFile("truncated provenance section")
        try:
            prov = json.loads(prov_bytes.decode("utf-8"))
            chunk_ids = prov["chunk_ids"]
            records = prov["provenance"]
        except (ValueError, KeyError) as exc:
            raise CorruptIndexFile(f"unreadable provenance table: {exc}") from exc
        if len(chunk_ids) != count or len(records) != count:
            raise CorruptIndexFile("provenance table size does not match vector count")

        index = cls(dim)
        matrix = np.frombuffer(vec_bytes, dtype="<f8").reshape(count, dim)
        for cid, row, rec in zip(chunk_ids, matrix, records):
            index.add(
                cid,
                np.array(row, dtype=np.float64),
                Provenance(
                    doc_id=rec["doc_id"],
                    kind=ChunkKind(rec["kind"]),
                    table_id=rec["table_id"],
                    row_index=rec["row_index"],
                ),
            )
        return index
