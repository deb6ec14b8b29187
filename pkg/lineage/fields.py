import posixpath

from django import forms
from django.core.exceptions import ValidationError
from django.utils.translation import gettext_lazy as _


class AddressField(forms.RegexField):
    """
    A 20-byte hex address, normalised to lowercase. Checksum casing is discarded.
    """

    def __init__(self, **kwargs):
        kwargs.setdefault('error_messages', {
            'invalid': _('Enter an address of exactly 40 hex characters after 0x.'),
        })
        super().__init__(r'\A0x[0-9a-fA-F]{40}\Z', strip=True, **kwargs)

    def to_python(self, value):
        value = super().to_python(value)
        return value.lower()


class SelectorField(forms.RegexField):
    def __init__(self, **kwargs):
        kwargs.setdefault('error_messages', {
            'invalid': _('Enter a 4-byte selector as 0x followed by 8 hex characters.'),
        })
        super().__init__(r'\A0x[0-9a-fA-F]{8}\Z', strip=True, **kwargs)

    def to_python(self, value):
        value = super().to_python(value)
        return value.lower()


class JSONBooleanField(forms.Field):
    """
    Only accepts real JSON booleans, a missing value is an error.
    """
    widget = forms.HiddenInput

    def to_python(self, value):
        if value in self.empty_values:
            return None
        if not isinstance(value, bool):
            raise ValidationError(_('Enter true or false.'), code='invalid')
        return value


class JSONListField(forms.Field):
    widget = forms.HiddenInput

    def __init__(self, **kwargs):
        kwargs.setdefault('required', False)
        super().__init__(**kwargs)

    def to_python(self, value):
        if value is None:
            return []
        if not isinstance(value, list):
            raise ValidationError(_('Enter a list.'), code='invalid')
        return value


class RelativePathField(forms.CharField):
    """
    A directory relative to the contract root: forward slashes, no '.' or '..' segments.
    """

    def __init__(self, **kwargs):
        kwargs.setdefault('required', False)
        super().__init__(strip=True, **kwargs)

    def to_python(self, value):
        value = super().to_python(value).replace('\\', '/')
        if value.startswith('/'):
            raise ValidationError(_('Directory {value} must be relative.').format(value=value), code='invalid')

        segments = [segment for segment in value.split('/') if segment and segment != '.']
        if '..' in segments:
            raise ValidationError(_('Directory {value} leaves the contract root.').format(value=value),
                                  code='invalid')

        return posixpath.join(*segments) if segments else ''


class SolidityFilenameField(forms.CharField):
    def __init__(self, **kwargs):
        super().__init__(strip=True, **kwargs)

    def to_python(self, value):
        value = super().to_python(value)
        if '/' in value or '\\' in value:
            raise ValidationError(_('Filename {value} contains a path separator.').format(value=value),
                                  code='invalid')
        if not value.endswith('.sol'):
            raise ValidationError(_('Filename {value} is not a .sol file.').format(value=value), code='invalid')
        return value
