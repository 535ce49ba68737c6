# Shared Components
