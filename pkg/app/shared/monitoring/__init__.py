# Monitoring module
