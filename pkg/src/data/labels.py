import numbers
from enum import Enum, IntEnum
from typing import Any

NUM_CLASSES = 6


class EmotionLabel(IntEnum):
    """Expression classes, indexed as in the challenge annotation"""
    ANGER = 0
    DISGUST = 1
    FEAR = 2
    HAPPINESS = 3
    SADNESS = 4
    SURPRISE = 5

    @classmethod
    def parse(cls, value: Any) -> 'EmotionLabel':
        """Strict parse: only integers 0..5 (no bools, no strings, no fractional floats)"""
        if isinstance(value, bool):
            raise ValueError(f"Invalid label: {value!r}")
        if isinstance(value, float):
            if not value.is_integer():
                raise ValueError(f"Invalid label: {value!r}")
            value = int(value)
        if not isinstance(value, numbers.Integral):
            raise ValueError(f"Invalid label: {value!r}")
        value = int(value)
        if not 0 <= value < NUM_CLASSES:
            raise ValueError(f"Invalid label: {value}")
        return cls(value)

    @property
    def display_name(self) -> str:
        return self.name.capitalize()


class Domain(str, Enum):
    SOURCE = "source"
    TARGET = "target"

    @classmethod
    def parse(cls, value: Any) -> 'Domain':
        try:
            return cls(value)
        except ValueError:
            raise ValueError(f"Unknown domain tag: {value!r}") from None


CLASS_NAMES = [label.display_name for label in EmotionLabel]
