"""Job entrypoints."""


