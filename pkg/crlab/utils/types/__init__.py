from .documents import (
    ConfigDocument,
    ConstraintVariantDocument,
    GridDocument,
    GridRow,
    ObjectiveDocument,
    TaskVariantDocument,
)

__all__ = [
    "ConfigDocument",
    "ObjectiveDocument",
    "GridDocument",
    "TaskVariantDocument",
    "ConstraintVariantDocument",
    "GridRow",
]
