"""Discrete-event kernel: links, fluctuations and drop rules."""
