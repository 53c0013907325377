"""Кэш срезов: бинарные массивы + JSON-описания + манифест разбиения."""

import logging
from pathlib import Path
from typing import Iterator, Optional

import numpy as np

from src.core.files import atomic_write_bytes, atomic_write_json, read_json

from ...edges.domain.entities import EdgeMap
from ...edges.domain.value_objects import EdgeSource
from ..domain.entities import SliceRecord, SplitManifest
from ..domain.value_objects import SliceClass
from ..exceptions import SliceCacheError

logger = logging.getLogger(__name__)

IMAGE_DTYPE = np.dtype("<f4")
MASK_DTYPE = np.dtype("u1")

MANIFEST_NAME = "manifest.json"
RECORDS_DIR = "records"


class SliceCache:
    """
    Каталог кэша срезов.

    Каждый срез хранится как ``<id>.f32`` (float32 little-endian),
    маски ``<id>_tumor.u8`` / ``<id>_inpaint.u8``, карта границ
    ``<id>_edge.u8`` и описание ``<id>.json``.
    """

    def __init__(self, root: Path) -> None:
        self.root = Path(root)
        self.records_dir = self.root / RECORDS_DIR

    @property
    def manifest_path(self) -> Path:
        return self.root / MANIFEST_NAME

    def exists(self) -> bool:
        return self.manifest_path.exists()

    def write_record(
        self,
        record: SliceRecord,
        edge_map: Optional[EdgeMap] = None,
        split: Optional[str] = None,
    ) -> Path:
        """
        Записать срез в кэш.

        Args:
            record: Срез
            edge_map: Карта границ (необязательно)
            split: Выборка субъекта

        Returns:
            Путь к JSON-описанию
        """
        rid = record.record_id
        files = {
            "image_file": f"{rid}.f32",
            "tumor_mask_file": f"{rid}_tumor.u8",
            "inpaint_mask_file": f"{rid}_inpaint.u8",
        }
        atomic_write_bytes(
            self.records_dir / files["image_file"],
            np.ascontiguousarray(record.image, dtype=IMAGE_DTYPE).tobytes(),
        )
        atomic_write_bytes(
            self.records_dir / files["tumor_mask_file"],
            np.ascontiguousarray(record.tumor_mask, dtype=MASK_DTYPE).tobytes(),
        )
        atomic_write_bytes(
            self.records_dir / files["inpaint_mask_file"],
            np.ascontiguousarray(record.inpaint_mask, dtype=MASK_DTYPE).tobytes(),
        )
        if edge_map is not None:
            files["edge_file"] = f"{rid}_edge.u8"
            atomic_write_bytes(
                self.records_dir / files["edge_file"],
                np.ascontiguousarray(edge_map.edges, dtype=MASK_DTYPE).tobytes(),
            )

        sidecar = {
            "record_id": rid,
            "subject_id": record.subject_id,
            "slice_index": record.slice_index,
            "class": record.slice_class.value,
            "tumor_pixel_count": record.tumor_pixel_count,
            "age": record.age,
            "shape": list(record.image.shape),
            "split": split,
            **files,
        }
        path = self.records_dir / f"{rid}.json"
        atomic_write_json(path, sidecar)
        return path

    def _read_array(self, name: str, dtype: np.dtype, shape: list[int]) -> np.ndarray:
        path = self.records_dir / name
        if not path.exists():
            raise SliceCacheError(f"Файл кэша {path} не найден", details={"path": str(path)})
        data = np.frombuffer(path.read_bytes(), dtype=dtype)
        if data.size != int(np.prod(shape)):
            raise SliceCacheError(
                f"Размер файла {path} не соответствует форме {shape}",
                details={"path": str(path)},
            )
        return data.reshape(shape).copy()

    def sidecar(self, record_id: str) -> dict:
        path = self.records_dir / f"{record_id}.json"
        if not path.exists():
            raise SliceCacheError(f"Описание среза {record_id} не найдено")
        return read_json(path)

    def read_record(self, record_id: str) -> SliceRecord:
        """Прочитать срез по идентификатору."""
        meta = self.sidecar(record_id)
        shape = meta["shape"]
        return SliceRecord(
            image=self._read_array(meta["image_file"], IMAGE_DTYPE, shape).astype(np.float32),
            tumor_mask=self._read_array(meta["tumor_mask_file"], MASK_DTYPE, shape),
            inpaint_mask=self._read_array(meta["inpaint_mask_file"], MASK_DTYPE, shape),
            subject_id=meta["subject_id"],
            slice_index=int(meta["slice_index"]),
            slice_class=SliceClass(meta["class"]),
            tumor_pixel_count=int(meta["tumor_pixel_count"]),
            age=meta.get("age"),
        )

    def read_edge(self, record_id: str) -> EdgeMap:
        """
        Прочитать закэшированную карту границ.

        Raises:
            SliceCacheError: Карта границ не была записана
        """
        meta = self.sidecar(record_id)
        edge_file = meta.get("edge_file")
        if not edge_file:
            raise SliceCacheError(
                f"Для среза {record_id} нет карты границ",
                details={"record_id": record_id},
            )
        edges = self._read_array(edge_file, MASK_DTYPE, meta["shape"])
        return EdgeMap(edges=edges, source=EdgeSource.native)

    def record_ids(self, split: Optional[str] = None) -> list[str]:
        """Идентификаторы срезов (сортированные), опционально одной выборки."""
        if not self.records_dir.exists():
            return []
        ids = []
        for path in sorted(self.records_dir.glob("*.json")):
            meta = read_json(path)
            if split is None or meta.get("split") == split:
                ids.append(meta["record_id"])
        return ids

    def iter_records(self, split: Optional[str] = None) -> Iterator[SliceRecord]:
        for rid in self.record_ids(split):
            yield self.read_record(rid)

    def write_manifest(self, manifest: SplitManifest, extra: Optional[dict] = None) -> None:
        payload = {"split": manifest.to_dict(), **(extra or {})}
        atomic_write_json(self.manifest_path, payload)

    def read_manifest(self) -> SplitManifest:
        """
        Прочитать манифест разбиения.

        Raises:
            SliceCacheError: Манифест отсутствует
        """
        if not self.manifest_path.exists():
            raise SliceCacheError(
                f"Манифест {self.manifest_path} не найден",
                details={"path": str(self.manifest_path)},
            )
        return SplitManifest.from_dict(read_json(self.manifest_path)["split"])
