# Services tests package

