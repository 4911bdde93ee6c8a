"""
Тесты для SURE-ID
"""
