"""Regenerate configs/fig*.cfg from the presets in lambda_memory.scenarios."""
import warnings
from pathlib import Path

from lambda_memory.io import config_to_ini
from lambda_memory.scenarios import PRESETS

warnings.simplefilter("ignore")
root = Path(__file__).resolve().parent.parent / "configs"
root.mkdir(exist_ok=True)
for name, make in PRESETS.items():
    (root / f"{name}.cfg").write_text(config_to_ini(make()))
    print(root / f"{name}.cfg")
