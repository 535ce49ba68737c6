# Dual-column bidirectional Mamba spoofing detector
