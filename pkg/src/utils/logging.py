"""
Experiment Logging - Logging utilities shared by trainers and the runner
"""
import logging
import math
import os
from typing import Any, Mapping


class ExperimentLogger:
    """Logger that renders training metrics compactly"""

    def __init__(self, name: str = "diversifying_regularization", level: int | str | None = None):
        """
        Initialize experiment logger

        Args:
            name: Logger name
            level: Logging level (default: LOG_LEVEL environment variable or INFO)
        """
        if level is None:
            level = os.getenv("LOG_LEVEL", "INFO").upper()
        self.logger = logging.getLogger(name)
        self.logger.setLevel(level)

        # Create console handler if not exists
        if not self.logger.handlers:
            handler = logging.StreamHandler()
            handler.setLevel(level)

            formatter = logging.Formatter(
                '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
            )
            handler.setFormatter(formatter)
            self.logger.addHandler(handler)

    def set_level(self, level: int | str):
        """Change the level of the logger and its handlers"""
        if isinstance(level, str):
            level = level.upper()
        self.logger.setLevel(level)
        for handler in self.logger.handlers:
            handler.setLevel(level)

    @staticmethod
    def format_metrics(metrics: Mapping[str, Any]) -> str:
        """
        Render a metric dictionary as ``name=value`` pairs

        Non-finite floats are flagged so diverging runs stand out in the log.

        Args:
            metrics: Metric name -> value

        Returns:
            Single-line rendering
        """
        parts = []
        for key, value in metrics.items():
            if isinstance(value, float):
                text = f"{value:.6g}"
                if not math.isfinite(value):
                    text += "(!)"
            else:
                text = str(value)
            parts.append(f"{key}={text}")
        return " ".join(parts)

    def debug(self, message: str, *args, **kwargs):
        """Log debug message"""
        self.logger.debug(str(message), *args, **kwargs)

    def info(self, message: str, *args, **kwargs):
        """Log info message"""
        self.logger.info(str(message), *args, **kwargs)

    def warning(self, message: str, *args, **kwargs):
        """Log warning message"""
        self.logger.warning(str(message), *args, **kwargs)

    def error(self, message: str, *args, **kwargs):
        """Log error message"""
        self.logger.error(str(message), *args, **kwargs)

    def log_epoch(self, arm: str, epoch: int, metrics: Mapping[str, Any], level: int = logging.DEBUG):
        """
        Log one epoch of a training arm

        Args:
            arm: Arm name (e.g. "dr", "no-dr", "dr/layer2")
            epoch: Epoch index
            metrics: Metric name -> value
        """
        self.logger.log(level, f"[{arm}] epoch {epoch}: {self.format_metrics(metrics)}")

    def log_arm(self, arm: str, minutes: float, final: Mapping[str, Any]):
        """
        Log completion of a comparison arm with its wall-clock time

        Args:
            arm: Arm name
            minutes: Wall-clock run time in minutes
            final: Final metrics of the arm
        """
        self.info(f"[{arm}] finished in {minutes:.2f} min: {self.format_metrics(final)}")


# Global logger instance
logger = ExperimentLogger()
