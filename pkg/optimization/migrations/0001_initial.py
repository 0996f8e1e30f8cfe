# Generated by Django 4.2.16 on 2026-10-18 10:12

from django.db import migrations, models
import django.db.models.deletion


class Migration(migrations.Migration):

    initial = True

    dependencies = []

    operations = [
        migrations.CreateModel(
            name='TrainingRun',
            fields=[
                ('created_at', models.DateTimeField(auto_now_add=True)),
                ('updated_at', models.DateTimeField(auto_now=True)),
                ('id', models.AutoField(primary_key=True, serialize=False)),
                ('name', models.CharField(max_length=100)),
                ('strategy', models.CharField(choices=[('grpo', 'grpo'), ('none', 'none'), ('downscale', 'downscale'), ('anchor', 'anchor'), ('shape', 'shape')], max_length=10)),
                ('seed', models.IntegerField(default=0)),
                ('config', models.JSONField()),
                ('summary', models.JSONField(blank=True, null=True)),
                ('status', models.CharField(choices=[('running', 'running'), ('finished', 'finished'), ('failed', 'failed')], db_index=True, default='running', max_length=10)),
                ('error', models.TextField(blank=True, default='')),
            ],
            options={
                'verbose_name': 'Training Run',
            },
        ),
        migrations.CreateModel(
            name='StepEntry',
            fields=[
                ('id', models.AutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('created_at', models.DateTimeField(auto_now_add=True)),
                ('updated_at', models.DateTimeField(auto_now=True)),
                ('step', models.PositiveIntegerField()),
                ('phase', models.CharField(choices=[('answer_only', 'answer_only'), ('think_answer', 'think_answer')], max_length=12)),
                ('top1_mean', models.FloatField()),
                ('skewness', models.FloatField(blank=True, null=True)),
                ('kl', models.FloatField()),
                ('objective', models.FloatField()),
                ('payload', models.JSONField()),
                ('run', models.ForeignKey(on_delete=django.db.models.deletion.CASCADE, related_name='steps', to='optimization.trainingrun')),
            ],
            options={
                'verbose_name': 'Step Entry',
                'verbose_name_plural': 'Step Entries',
                'ordering': ['step'],
                'unique_together': {('run', 'step')},
            },
        ),
    ]
