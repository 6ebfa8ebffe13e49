"""
Artifacts - Image grids, run summaries and count tables written by the runner
"""
import csv
import json
from pathlib import Path
from typing import Any, Mapping, Sequence, Tuple

import numpy as np
from PIL import Image

from src.utils.errors import DimensionMismatchError


def tile_grid(cells: np.ndarray, image_shape: Tuple[int, int], padding: int = 1) -> np.ndarray:
    """
    Tile a (rows, cols, pixels) array of flat images into one 2-d raster

    Args:
        cells: Flat images laid out on a grid, values in [0, 1]
        image_shape: (height, width) of one image
        padding: Pixels of background between tiles

    Returns:
        Float raster with background 0
    """
    cells = np.asarray(cells, dtype=np.float64)
    height, width = image_shape
    if cells.ndim != 3 or cells.shape[2] != height * width:
        raise DimensionMismatchError(f"cells of shape {cells.shape} do not hold {image_shape} images")
    rows, cols = cells.shape[:2]
    raster = np.zeros((rows * (height + padding) + padding, cols * (width + padding) + padding))
    for i in range(rows):
        for j in range(cols):
            top = padding + i * (height + padding)
            left = padding + j * (width + padding)
            raster[top:top + height, left:left + width] = cells[i, j].reshape(height, width)
    return raster


def save_image_grid(cells: np.ndarray, image_shape: Tuple[int, int], path: str | Path) -> Path:
    """Write tiled images as an 8-bit grayscale PNG"""
    raster = tile_grid(cells, image_shape)
    if raster.min() < 0.0 or raster.max() > 1.0:
        raise ValueError("image values must lie in [0, 1]")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(np.rint(raster * 255.0).astype(np.uint8)).save(path, format="PNG")
    return path


def write_summary(summary: Mapping[str, Any], path: str | Path) -> Path:
    """Write the run summary as indented JSON"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        json.dump(summary, f, indent=2, sort_keys=True, default=str)
        f.write("\n")
    return path


def write_counts_csv(counts: Sequence[int], path: str | Path) -> Path:
    """Write a batch,pair_count table"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["batch", "pair_count"])
        for batch, count in enumerate(counts):
            writer.writerow([batch, int(count)])
    return path
