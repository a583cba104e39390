"""Custom TextChoice metaclass."""

from django.db.models import TextChoices


class ExtendedTextChoicesMeta(type(TextChoices)):  # type: ignore
    """Metaclass for `TextChoices` enums that exposes helpers computed from the members."""

    @property
    def max_length(cls) -> int:
        """Returns the maximum length."""
        return max(len(value) for value in cls.values)

    def parse(cls, value: str):  # type: ignore[no-untyped-def]
        """Returns the member matching `value`, ignoring case, dashes and underscores.

        :param value: raw value, e.g. ``"Uniform-Grid"`` or ``"uniform_grid"``.
        :return: the matching member.
        :raises ValueError: if no member matches.
        """
        normalized = value.strip().lower().replace("-", "_")
        for member in cls:
            if member.value == normalized:
                return member
        raise ValueError(f"'{value}' is not a valid {cls.__name__}; expected one of {cls.values}")


__all__ = ["ExtendedTextChoicesMeta"]
