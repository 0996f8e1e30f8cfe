import json
from pathlib import Path

from .models import StepEntry
from .serializers import StepLogSerializer


class MemorySink:
    def __init__(self):
        self.records = []

    def write(self, record):
        self.records.append(record)


class JsonLinesSink:
    """Run log: one StepLogSerializer document per line."""

    def __init__(self, path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._file = open(self.path, "w")

    def write(self, record):
        self._file.write(json.dumps(StepLogSerializer(record).data, sort_keys=True))
        self._file.write("\n")

    def close(self):
        if not self._file.closed:
            self._file.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc_info):
        self.close()


class RegistrySink:
    def __init__(self, run):
        self.run = run

    def write(self, record):
        StepEntry.objects.record(self.run, record)
