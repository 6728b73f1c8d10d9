# Transforms tests package
