"""
Run State - Bookkeeping for experiment runs and their comparison arms
"""
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional


class ExperimentKind(str, Enum):
    """Experiments the runner knows"""
    PRETRAIN_DBN = "pretrain-dbn"
    TRAIN_DNN = "train-dnn"
    TRAIN_VAE = "train-vae"
    GRADCHECK = "gradcheck"
    PAIRS_STATS = "pairs-stats"


class ArmStatus(Enum):
    """Arm execution states"""
    PENDING = "pending"
    RUNNING = "running"
    COMPLETED = "completed"
    FAILED = "failed"


@dataclass
class ArmRecord:
    """State for a single arm (e.g. with or without diversification)"""
    name: str
    alpha: float
    status: ArmStatus = ArmStatus.PENDING
    started_at: Optional[float] = None
    finished_at: Optional[float] = None
    artifacts: List[str] = field(default_factory=list)
    final_metrics: Dict[str, float] = field(default_factory=dict)
    error: Optional[str] = None

    @property
    def minutes(self) -> float:
        """Wall-clock run time in minutes (0 until started)"""
        if self.started_at is None:
            return 0.0
        end = self.finished_at if self.finished_at is not None else time.perf_counter()
        return (end - self.started_at) / 60.0


@dataclass
class RunRecord:
    """Tracks the arms of one experiment invocation"""

    kind: ExperimentKind
    seed: int
    current_arm: Optional[ArmRecord] = None
    arms: List[ArmRecord] = field(default_factory=list)
    notes: Dict[str, Any] = field(default_factory=dict)

    def start_arm(self, name: str, alpha: float) -> ArmRecord:
        """
        Start a new arm

        Args:
            name: Arm name (e.g. "dr", "no-dr")
            alpha: Diversification weight of the arm

        Returns:
            New ArmRecord
        """
        self.current_arm = ArmRecord(name=name, alpha=alpha, status=ArmStatus.RUNNING,
                                     started_at=time.perf_counter())
        return self.current_arm

    def add_artifact(self, path: str):
        """Record a file written by the current arm"""
        if self.current_arm:
            self.current_arm.artifacts.append(str(path))

    def complete_arm(self, final_metrics: Dict[str, float]):
        """Mark current arm as completed"""
        if self.current_arm:
            self.current_arm.finished_at = time.perf_counter()
            self.current_arm.final_metrics = dict(final_metrics)
            self.current_arm.status = ArmStatus.COMPLETED
            self.arms.append(self.current_arm)
            self.current_arm = None

    def fail_arm(self, error: str):
        """Mark current arm as failed"""
        if self.current_arm:
            self.current_arm.finished_at = time.perf_counter()
            self.current_arm.error = error
            self.current_arm.status = ArmStatus.FAILED
            self.arms.append(self.current_arm)
            self.current_arm = None

    def get_summary(self) -> Dict[str, Any]:
        """Summary written to summary.json"""
        return {
            "kind": self.kind.value,
            "seed": self.seed,
            "arms": [
                {
                    "name": arm.name,
                    "alpha": arm.alpha,
                    "status": arm.status.value,
                    "minutes": round(arm.minutes, 4),
                    "final": arm.final_metrics,
                    "artifacts": arm.artifacts,
                    "error": arm.error,
                }
                for arm in self.arms
            ],
            **self.notes,
        }
