# Problem tests package
