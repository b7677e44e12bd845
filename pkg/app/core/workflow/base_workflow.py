from abc import ABC, abstractmethod
import logging
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, Optional, Union

from ..config.pnda_config import PndaConfig, config_hash
from ..storage.artifact_repository import ArtifactRepository
from ..storage.models import RunManifest, RunStatus

logger = logging.getLogger(__name__)


class BaseWorkflow(ABC):
    """Base class for command workflows.

    A workflow writes its artifacts through one ArtifactRepository and
    finishes by writing the run manifest, also when it fails.
    """

    command: str = ""

    def __init__(self,
                 config: PndaConfig,
                 output_dir: Union[str, Path],
                 config_path: Optional[Union[str, Path]] = None):
        """Initialize workflow with its configuration and output directory.

        Args:
            config: Validated configuration
            output_dir: Directory receiving every artifact of the run
            config_path: File the configuration came from, for the manifest
        """
        self.config = config
        self.config_path = str(config_path) if config_path is not None else None
        self.repository = ArtifactRepository(output_dir)
        self.status = RunStatus.INITIALIZED
        self.start_time: Optional[datetime] = None
        self.end_time: Optional[datetime] = None
        self.results: Dict[str, Any] = {}
        self.error: Optional[Exception] = None

    @property
    def seed(self) -> Optional[int]:
        return self.config.experiment.seed

    def setup(self) -> None:
        """Prepare inputs before the run; the default does nothing."""

    @abstractmethod
    def run(self) -> Dict[str, Any]:
        """Do the work of the command.

        Returns:
            Dict of JSON-serializable results, copied into the manifest
        """

    def handle_error(self, error: Exception) -> None:
        """Record the failure for the manifest.

        Args:
            error: Exception that occurred
        """
        self.error = error
        diagnostics = getattr(error, "diagnostics", None)
        if diagnostics:
            self.results["diagnostics"] = diagnostics

    def cleanup(self) -> None:
        """Write the manifest; it is the last artifact of every run."""
        details = dict(self.results)
        if self.error is not None:
            details["error"] = f"{type(self.error).__name__}: {self.error}"
        manifest = RunManifest(
            command=self.command,
            config_path=self.config_path,
            seed=self.seed,
            output_dir=str(self.repository.root),
            config_hash=config_hash(self.config),
            status=self.status,
            started_at=self.start_time,
            finished_at=self.end_time,
            details=details,
        )
        self.repository.write_manifest(manifest)

    def execute(self) -> Dict[str, Any]:
        """Execute the workflow.

        Returns:
            Dict containing workflow results
        """
        try:
            logger.info(f"Starting {self.command} in {self.repository.root}")
            self.start_time = datetime.now()
            self.status = RunStatus.RUNNING
            self.setup()
            self.results.update(self.run())
            self.status = RunStatus.COMPLETED
            return self.results

        except Exception as e:
            self.status = RunStatus.FAILED
            logger.error(f"{self.command} failed: {str(e)}")
            self.handle_error(e)
            raise

        finally:
            self.end_time = datetime.now()
            self.cleanup()

    def get_status(self) -> Dict[str, Any]:
        """Get current workflow status.

        Returns:
            Dict containing status information
        """
        return {
            "command": self.command,
            "status": self.status.value,
            "start_time": self.start_time,
            "end_time": self.end_time,
            "artifacts": list(self.repository.artifacts),
        }
