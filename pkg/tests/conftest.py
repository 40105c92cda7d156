import os

from dotenv import load_dotenv

# Load .env before src.utils.config reads METADIST_* and before skipif markers evaluate os.getenv.
load_dotenv()

from src.utils import config as settings  # noqa: E402


def pytest_report_header(config):
    slow = "enabled" if os.getenv("RUN_SLOW_TESTS") else "skipped (set RUN_SLOW_TESTS=1)"
    return [
        f"slow tests: {slow}",
        f"metadist: workers={settings.WORKERS} block_size={settings.BLOCK_SIZE} mu={settings.MU}",
    ]
