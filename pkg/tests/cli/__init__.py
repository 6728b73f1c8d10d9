# Cli tests package
