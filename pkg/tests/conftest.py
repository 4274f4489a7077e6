import sys
from pathlib import Path

# test-local helpers importable regardless of invocation directory
sys.path.insert(0, str(Path(__file__).parent))
