import json
import sys
from pathlib import Path

FIXTURES = Path(__file__).parent / "fixtures"

# make `from conftest import ...` work inside test modules
sys.path.insert(0, str(Path(__file__).parent))


def pilot_value(name: str) -> float:
    """Frozen scalar from the one-time pilot run (tools/gen_fixtures.py)."""
    values = json.loads((FIXTURES / "pilot_values.json").read_text())
    return float(values[name])


def fixture_path(name: str) -> Path:
    return FIXTURES / name
