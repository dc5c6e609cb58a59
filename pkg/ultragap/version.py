# caution: this file gets overwritten when building using PyInstaller, don't add required data in here without handling
__version__ = "1.0.0"
