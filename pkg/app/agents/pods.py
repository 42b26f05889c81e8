"""
Data pods.

A pod holds one provider's records, the provider's preference file and the
set of agents granted read access. Pods live in memory for simulations or
on disk as a directory with records.csv, preference.json and grants.json.
"""

import json
import logging
from pathlib import Path
from typing import Iterable, Sequence

from app.agents.models import PreferenceFile, ResourceDescription
from app.datamodel.loader import export_records, load_dataset
from app.datamodel.models import Record, Schema
from app.errors import AccessDeniedError

logger = logging.getLogger(__name__)


class Pod:
    """One provider's data store with a read grant list."""

    def __init__(
        self,
        owner: str,
        records: Sequence[Record],
        preference: PreferenceFile,
        grants: Iterable[str] | None = None,
    ):
        self.owner = owner
        self.preference = preference
        self.grants = frozenset(preference.trusted_encryption_agents if grants is None else grants)
        self._records = list(records)
        self.reads: list[str] = []

    def read(self, agent: str) -> list[Record]:
        """Return the records to a granted agent; every successful read is logged on the pod."""
        if agent not in self.grants:
            raise AccessDeniedError(f"agent {agent} has no read grant on pod {self.owner}")
        self.reads.append(agent)
        return list(self._records)

    @property
    def records(self) -> list[Record]:
        """Read-only view for the owner; agents go through read()."""
        return list(self._records)

    def __len__(self) -> int:
        return len(self._records)

    def __repr__(self) -> str:
        return f"Pod(owner={self.owner!r}, records={len(self._records)})"


def build_pods(
    partitions: Sequence[Sequence[Record]],
    preference: PreferenceFile,
    prefix: str = "provider",
) -> list[Pod]:
    """One pod per partition, all sharing a preference file and granting its encryption agents."""
    width = max(3, len(str(len(partitions))))
    return [
        Pod(owner=f"{prefix}-{i:0{width}d}", records=part, preference=preference)
        for i, part in enumerate(partitions)
    ]


def load_pod(directory: str | Path, schema: Schema, pod_id: str | None = None) -> Pod:
    """Load a pod directory (records.csv, preference.json, optional grants.json)."""
    directory = Path(directory)
    preference = PreferenceFile.model_validate_json(
        (directory / "preference.json").read_text(encoding="utf-8")
    )
    grants_path = directory / "grants.json"
    grants = None
    if grants_path.exists():
        grants = json.loads(grants_path.read_text(encoding="utf-8"))
    records = load_dataset(directory / "records.csv", schema)
    return Pod(owner=pod_id or directory.name, records=records, preference=preference, grants=grants)


def save_pod(pod: Pod, directory: str | Path, schema: Schema) -> None:
    """Write a pod in the on-disk layout read by load_pod."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    export_records(pod.records, schema, directory / "records.csv")
    (directory / "preference.json").write_text(
        json.dumps({
            "trusted_encryption_agents": sorted(pod.preference.trusted_encryption_agents),
            "trusted_computation_agents": sorted(pod.preference.trusted_computation_agents),
        }, indent=2),
        encoding="utf-8",
    )
    (directory / "grants.json").write_text(json.dumps(sorted(pod.grants)), encoding="utf-8")


def load_resources(path: str | Path, schema: Schema) -> list[Pod]:
    """Resolve a resource description into pods; relative paths are taken from its directory."""
    path = Path(path)
    description = ResourceDescription.model_validate_json(path.read_text(encoding="utf-8"))
    base = path.parent
    pods = []
    for entry in description.entries:
        resource = base / entry.resource
        preference = PreferenceFile.model_validate_json(
            (base / entry.preference).read_text(encoding="utf-8")
        )
        grants = None
        if entry.grants is not None:
            grants = json.loads((base / entry.grants).read_text(encoding="utf-8"))
        records = load_dataset(resource, schema)
        pods.append(Pod(owner=entry.pod_id, records=records, preference=preference, grants=grants))
    logger.info(f"Loaded {len(pods)} pods from {path}")
    return pods
