"""
Configuration Management - Load and manage experiment configuration files
"""
import os
import yaml
from pathlib import Path
from typing import Dict, Any, Optional
from dotenv import load_dotenv

from src.utils.logging import logger


class Config:
    """Configuration manager"""

    def __init__(self, config_path: Optional[str | Path] = None):
        """
        Initialize configuration

        Args:
            config_path: Path to config.yaml (default: config/config.yaml)
        """
        # Load environment variables
        load_dotenv()

        if config_path is None:
            # Project root (this file is in src/utils/)
            project_root = Path(__file__).parent.parent.parent
            config_path = project_root / "config" / "config.yaml"

        self.config_path = Path(config_path)
        self.config: Dict[str, Any] = {}
        self.load()

    def load(self):
        """Load configuration from YAML file"""
        if not self.config_path.exists():
            logger.warning(f"Config file not found at {self.config_path}, using built-in defaults")
            self.config = {}
            return
        with open(self.config_path, 'r') as f:
            self.config = yaml.safe_load(f) or {}

    def get(self, key: str, default: Any = None) -> Any:
        """
        Get configuration value

        Args:
            key: Configuration key (supports dot notation, e.g., "experiments.train-dnn.lr")
            default: Default value if key not found

        Returns:
            Configuration value or default
        """
        node: Any = self.config
        for part in key.split("."):
            if not isinstance(node, dict) or part not in node:
                return default
            node = node[part]
        return node

    def get_experiment_section(self, kind: str) -> Dict[str, Any]:
        """
        Get merged settings for an experiment kind

        The ``defaults`` section applies to every experiment and is
        overridden key by key by ``experiments.<kind>``.

        Args:
            kind: Experiment kind (e.g. "train-dnn")

        Returns:
            Flat dictionary of settings
        """
        merged: Dict[str, Any] = dict(self.get("defaults", {}) or {})
        experiments = self.get("experiments", {}) or {}
        merged.update(experiments.get(kind, {}) or {})
        return merged

    def get_data_root(self) -> Optional[Path]:
        """Get dataset root directory (DR_DATA_ROOT wins over data.root)"""
        root = os.getenv("DR_DATA_ROOT") or self.get("data.root")
        return Path(root).expanduser() if root else None

    def get_output_root(self) -> Path:
        """Get default output directory"""
        return Path(os.getenv("DR_OUTPUT_DIR") or self.get("output.root", "runs"))
