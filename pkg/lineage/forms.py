from django import forms
from django.core.exceptions import ValidationError
from django.utils.translation import gettext_lazy as _

from lineage.fields import (AddressField, JSONBooleanField, JSONListField, RelativePathField, SelectorField,
                            SolidityFilenameField)
from lineage.records import SourceFile

TRACE_FIELDS = ('proxy_address', 'callee_address', 'timestamp', 'block_number', 'selector', 'tx_id')


def form_errors_as_text(form):
    messages = []
    for name, errors in sorted(form.errors.items()):
        for error in errors:
            messages.append('{name}: {error}'.format(name=name, error=error) if name != '__all__' else error)
    return '; '.join(messages)


class TraceEventForm(forms.Form):
    proxy_address = AddressField()
    callee_address = AddressField()
    timestamp = forms.IntegerField(min_value=0)
    block_number = forms.IntegerField(min_value=0)
    selector = SelectorField()
    tx_id = forms.CharField(strip=False)


class SourceFileForm(forms.Form):
    directory = RelativePathField()
    filename = SolidityFilenameField()
    content = forms.CharField(strip=False, required=False)


class ContractRecordForm(forms.Form):
    address = AddressField()
    creator = AddressField()
    deploy_timestamp = forms.IntegerField(min_value=0)
    verified = JSONBooleanField()
    open_source = JSONBooleanField()
    files = JSONListField()

    def clean_files(self):
        source_files = []
        seen = set()
        for index, item in enumerate(self.cleaned_data['files']):
            form = SourceFileForm(data=item if isinstance(item, dict) else {})
            if not form.is_valid():
                raise ValidationError(_('File #{index}: {errors}').format(index=index,
                                                                         errors=form_errors_as_text(form)),
                                      code='invalid')

            source_file = SourceFile(**form.cleaned_data)
            if (source_file.directory, source_file.filename) in seen:
                raise ValidationError(_('Duplicate file {path}').format(path=source_file.path), code='duplicate')
            seen.add((source_file.directory, source_file.filename))
            source_files.append(source_file)

        source_files.sort(key=lambda f: (f.directory, f.filename))
        return tuple(source_files)

    def clean(self):
        super().clean()

        if 'open_source' in self.cleaned_data and 'files' in self.cleaned_data:
            open_source = self.cleaned_data['open_source']
            if open_source and not self.cleaned_data['files']:
                raise ValidationError(_('Open source contract without files'), code='invalid')
            if not open_source and self.cleaned_data['files']:
                raise ValidationError(_('Closed source contract with files'), code='invalid')

        return self.cleaned_data


class FindingForm(forms.Form):
    tool = forms.CharField()
    vuln_type = forms.CharField()
    contract = AddressField()
    directory = RelativePathField()
    filename = SolidityFilenameField()
    start_line = forms.IntegerField(min_value=1)
    end_line = forms.IntegerField(min_value=1)
    message = forms.CharField(strip=False, required=False)

    def clean(self):
        super().clean()

        start_line = self.cleaned_data.get('start_line')
        end_line = self.cleaned_data.get('end_line')
        if start_line and end_line and start_line > end_line:
            raise ValidationError(_('Line range {start}-{end} is reversed').format(start=start_line, end=end_line),
                                  code='invalid')

        return self.cleaned_data


class FingerprintForm(forms.Form):
    address = AddressField()
    k = forms.IntegerField(min_value=1)
    seed = forms.IntegerField(min_value=0)
    shingle_count = forms.IntegerField(min_value=0)
    signature = JSONListField()

    def clean(self):
        super().clean()

        k = self.cleaned_data.get('k')
        signature = self.cleaned_data.get('signature')
        if k is None or signature is None:
            return self.cleaned_data

        if len(signature) != k:
            raise ValidationError(_('Signature has {length} slots, expected {k}').format(length=len(signature), k=k),
                                  code='invalid')
        try:
            values = tuple(int(value, 16) for value in signature)
        except (TypeError, ValueError):
            raise ValidationError(_('Signature slots must be hex strings'), code='invalid') from None
        if any(value >= 1 << 64 for value in values):
            raise ValidationError(_('Signature slots must fit in 64 bits'), code='invalid')

        self.cleaned_data['signature'] = values
        return self.cleaned_data
