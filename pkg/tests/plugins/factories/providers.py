"""Custom providers."""

from faker import providers


class SearchBoxProvider(providers.BaseProvider):
    """Create a custom provider to instantiate search box bounds."""

    def box_bounds(self, dim: int = 2) -> tuple[tuple[float, ...], tuple[float, ...]]:
        """Generates lower and upper bounds of a box with sides between 0.5 and 5."""
        lower = tuple(round(self.generator.random.uniform(-5.0, 5.0), 3) for _ in range(dim))
        upper = tuple(round(lo + self.generator.random.uniform(0.5, 5.0), 3) for lo in lower)
        return lower, upper
