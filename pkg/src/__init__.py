# src/__init__.py
# pacotes do projeto
