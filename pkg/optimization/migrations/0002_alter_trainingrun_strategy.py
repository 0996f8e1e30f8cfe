# Generated by Django 4.2.16 on 2026-10-18 16:40

from django.db import migrations, models


class Migration(migrations.Migration):

    dependencies = [
        ('optimization', '0001_initial'),
    ]

    operations = [
        migrations.AlterField(
            model_name='trainingrun',
            name='strategy',
            field=models.CharField(choices=[('grpo', 'grpo'), ('sft', 'sft'), ('none', 'none'), ('downscale', 'downscale'), ('anchor', 'anchor'), ('shape', 'shape')], max_length=10),
        ),
    ]
