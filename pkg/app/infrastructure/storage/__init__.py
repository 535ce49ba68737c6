# Storage
