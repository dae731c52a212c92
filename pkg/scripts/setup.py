"""
t2f setup script.
Run once after cloning: python scripts/setup.py
"""

import shutil
import subprocess
import sys
from pathlib import Path

ROOT = Path(__file__).parents[1]


def run(cmd: list[str], **kwargs):
    print(f"  $ {' '.join(cmd)}")
    result = subprocess.run(cmd, **kwargs)
    if result.returncode != 0:
        print(f"[ERROR] Command failed: {' '.join(cmd)}")
        sys.exit(result.returncode)


def main():
    print("=== t2f Setup ===\n")

    env_path = ROOT / ".env"
    if not env_path.exists():
        shutil.copy(ROOT / ".env.example", env_path)
        print("[OK] Created .env from .env.example\n")
    else:
        print("[--] .env already exists\n")

    print("[1/2] Installing Python dependencies...")
    run([sys.executable, "-m", "pip", "install", "-r", str(ROOT / "requirements.txt")])

    print("\n[2/2] Checking gradients of the tensor engine...")
    run([sys.executable, str(ROOT / "cli.py"), "gradcheck", "--primitives-only"], cwd=ROOT)

    print("\n=== Setup complete ===")
    print("Next steps:")
    print("  1. Run: python cli.py synth --out data/synth")
    print("  2. Run: python cli.py train --dataset data/synth --out runs/gen.t2fg")
    print("  3. Run: python cli.py generate --ckpt runs/gen.t2fg --caption \"He is smiling.\" --grid runs/grid.ppm")


if __name__ == "__main__":
    main()
