# Command set v1
